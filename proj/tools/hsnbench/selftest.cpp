#include "selftest.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "hsn/experiments.hpp"
#include "hsn/linalg.hpp"
#include "hsn/model.hpp"
#include "hsn/optimizers.hpp"
#include "hsn/rng.hpp"

namespace hsnbench {

namespace {

using hsn::CounterRng;
using hsn::SymMatrix;
using hsn::Vector;

Vector gaussian_vector(CounterRng& rng, hsn::Index d) {
  std::normal_distribution<double> normal;
  Vector v(d);
  for (hsn::Index i = 0; i < d; ++i) v(i) = normal(rng);
  return v;
}

SymMatrix random_spd(CounterRng& rng, hsn::Index d) {
  Eigen::MatrixXd b(d, d);
  for (hsn::Index j = 0; j < d; ++j) b.col(j) = gaussian_vector(rng, d);
  Eigen::MatrixXd m = b * b.transpose() / static_cast<double>(d);
  m.diagonal().array() += 0.5;
  return SymMatrix(m);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

InvariantResult smw_suite(std::uint64_t seed) {
  CounterRng rng(hsn::derive_seed(seed, "selftest-smw"));
  std::uniform_int_distribution<int> dim(1, 20);
  std::uniform_real_distribution<double> weight(0.0, 2.0);
  double worst_inverse = 0.0, worst_shift = 0.0, worst_trace = 0.0;
  for (int t = 0; t < 200; ++t) {
    const hsn::Index d = dim(rng);
    const SymMatrix s = random_spd(rng, d);
    const SymMatrix s_inv = hsn::direct_inverse(s);
    const Vector phi = gaussian_vector(rng, d);
    const double c = weight(rng);
    const auto res = hsn::smw_update(s_inv, phi, c);
    const SymMatrix direct = hsn::direct_inverse(hsn::rank1_accumulate(s, phi, c));
    worst_inverse = std::max(worst_inverse, hsn::frobenius_distance(res.matrix, direct) / direct.frobenius_norm());
    const Vector lhs = res.matrix * phi;
    const Vector rhs = (s_inv * phi) / (1.0 + res.g);
    worst_shift = std::max(worst_shift, (lhs - rhs).cwiseAbs().maxCoeff());
    const Vector w = s_inv * phi;
    worst_trace = std::max(worst_trace,
                           std::abs(res.matrix.trace() - (s_inv.trace() - c / (1.0 + res.g) * w.squaredNorm())));
  }
  const bool pass = worst_inverse <= 1e-9 && worst_shift <= 1e-12 && worst_trace <= 1e-10;
  return {"smw_update", pass,
          "max rel inverse error " + fmt(worst_inverse) + ", shift " + fmt(worst_shift) + ", trace " + fmt(worst_trace)};
}

InvariantResult sigmoid_suite(std::uint64_t seed) {
  CounterRng rng(hsn::derive_seed(seed, "selftest-sigmoid"));
  std::uniform_real_distribution<double> x(-40.0, 40.0);
  bool pass = hsn::sigmoid(0.0) == 0.5 && hsn::sigmoid(750.0) == 1.0 && hsn::sigmoid(-750.0) == 0.0;
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const double v = x(rng);
    worst = std::max(worst, std::abs(hsn::sigmoid(v) + hsn::sigmoid(-v) - 1.0));
    pass = pass && hsn::coeff_c(hsn::scalar::curvature(v), 0.0, hsn::HybridWeights(1.0, 1.0)) <= 0.25;
  }
  pass = pass && worst <= 2.3e-16;
  return {"sigmoid", pass, "max |pi(x) + pi(-x) - 1| = " + fmt(worst)};
}

InvariantResult ons_suite(std::uint64_t seed) {
  const auto stream_seed = hsn::derive_seed(seed, "selftest-ons");
  hsn::SyntheticSpec spec{4, stream_seed, stream_seed, 10, std::nullopt};
  const Vector theta = hsn::gen_theta(spec);
  hsn::OptimizerConfig ons;
  ons.algorithm = hsn::Algorithm::ONS;
  hsn::OptimizerConfig hsn01;
  hsn01.weights = hsn::HybridWeights(0.0, 1.0);
  auto a = hsn::make_state(ons, 4);
  auto b = hsn::make_state(hsn01, 4);
  auto stream = hsn::make_uniform_stream(theta, stream_seed, 2000);
  hsn::Sample s;
  bool identical = true;
  double max_eig = 0.0;
  while (stream.next(s)) {
    hsn::step(a, s);
    hsn::step(b, s);
    identical = identical && a.theta == b.theta && a.s_inv->dense() == b.s_inv->dense();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b.s_inv->dense());
  max_eig = eig.eigenvalues().maxCoeff();
  return {"ons_equals_hsn01", identical && max_eig <= 1.0,
          std::string(identical ? "bit-identical" : "diverged") + ", max eig of S_n^-1 " + fmt(max_eig)};
}

InvariantResult replication_suite(std::uint64_t seed) {
  hsn::ExperimentConfig cfg;
  cfg.spec = hsn::SyntheticSpec{3, seed, hsn::derive_seed(seed, "selftest-reps"), 10, std::nullopt};
  cfg.n = 500;
  const auto pooled = hsn::mse_curve(cfg, 3);
  bool pass = true;
  for (std::size_t p = 0; p < pooled.size(); ++p) {
    double total = 0.0;
    for (std::uint64_t r = 0; r < 3; ++r) total += hsn::mse_curve(cfg, 1, r)[p].value;
    pass = pass && total / 3.0 == pooled[p].value;
  }
  cfg.workers = 3;
  const auto threaded = hsn::mse_curve(cfg, 3);
  for (std::size_t p = 0; p < pooled.size(); ++p) pass = pass && threaded[p].value == pooled[p].value;
  return {"replication_aggregation", pass, "R=3 curve vs mean of R=1 curves, and 1 vs 3 workers"};
}

}  // namespace

std::vector<InvariantResult> run_invariant_suites(unsigned long long seed) {
  return {smw_suite(seed), sigmoid_suite(seed), ons_suite(seed), replication_suite(seed)};
}

}  // namespace hsnbench
