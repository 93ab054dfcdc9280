#include "hsn/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "hsn/errors.hpp"
#include "hsn/parallel.hpp"
#include "hsn/rng.hpp"

namespace hsn {

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::SyntheticKnownTheta: return "synthetic-known-theta";
    case Provenance::BatchNewtonFit: return "batch-newton-fit";
  }
  return "?";
}

namespace {

struct ShardSums {
  Eigen::MatrixXd h, h_sq, s, s_sq, diff_sq;
  double loss = 0.0;
  std::uint64_t count = 0;

  ShardSums(Index d, bool full) : h(Eigen::MatrixXd::Zero(d, d)) {
    if (full) {
      h_sq = s = s_sq = diff_sq = Eigen::MatrixXd::Zero(d, d);
    }
  }
};

std::uint64_t shard_size(std::uint64_t m, unsigned shard) {
  return m / kMonteCarloShards + (shard < m % kMonteCarloShards ? 1 : 0);
}

// Lower triangle only; mirrored at the end.
void accumulate_shard(const Vector& theta, const FeatureSampler& sampler, std::uint64_t seed,
                      unsigned shard, std::uint64_t count, bool full, ShardSums& out) {
  CounterRng feature_rng(derive_seed(seed, "mc-features", shard));
  CounterRng label_rng(derive_seed(seed, "mc-labels", shard));
  const Index d = theta.size();
  Vector phi(d);
  for (std::uint64_t k = 0; k < count; ++k) {
    sampler.draw(feature_rng, phi);
    const double m = theta.dot(phi);
    const double a = scalar::curvature(m);
    if (!full) {
      for (Index j = 0; j < d; ++j) {
        const double aj = a * phi(j);
        for (Index i = j; i < d; ++i) out.h(i, j) += aj * phi(i);
      }
      continue;
    }
    const double p = sigmoid(m);
    const int y = label_rng.uniform01() < p ? 1 : 0;
    const double r = scalar::residual(m, y);
    const double b = r * r;
    out.loss += softplus(m) - m * p;
    for (Index j = 0; j < d; ++j) {
      const double aj = a * phi(j);
      const double bj = b * phi(j);
      for (Index i = j; i < d; ++i) {
        // Same operation order as the Hessian-only path so both agree bit for bit.
        const double ax = aj * phi(i);
        const double bx = bj * phi(i);
        const double dx = bx - ax;
        out.h(i, j) += ax;
        out.h_sq(i, j) += ax * ax;
        out.s(i, j) += bx;
        out.s_sq(i, j) += bx * bx;
        out.diff_sq(i, j) += dx * dx;
      }
    }
  }
  out.count = count;
}

Eigen::MatrixXd mirror_lower(Eigen::MatrixXd m) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = j + 1; i < m.rows(); ++i) m(j, i) = m(i, j);
  }
  return m;
}

std::vector<ShardSums> run_shards(const Vector& theta, const FeatureSampler& sampler,
                                  std::uint64_t m, std::uint64_t seed, unsigned workers,
                                  bool full) {
  if (m == 0) throw InvalidArgument("Monte-Carlo estimate: sample count must be >= 1");
  if (sampler.dim() != theta.size()) {
    throw DimensionMismatch("Monte-Carlo estimate", theta.size(), sampler.dim());
  }
  if (!theta.allFinite()) throw NonFiniteInput("Monte-Carlo estimate");
  std::vector<ShardSums> shards(kMonteCarloShards, ShardSums(theta.size(), full));
  parallel_for(kMonteCarloShards, workers, [&](std::size_t s) {
    const auto shard = static_cast<unsigned>(s);
    accumulate_shard(theta, sampler, seed, shard, shard_size(m, shard), full, shards[s]);
  });
  return shards;
}

SymMatrix standard_error(const Eigen::MatrixXd& sum, const Eigen::MatrixXd& sum_sq, double m) {
  Eigen::MatrixXd mean = sum / m;
  Eigen::MatrixXd var = (sum_sq / m - mean.cwiseProduct(mean)).cwiseMax(0.0);
  return SymMatrix(mirror_lower((var / m).cwiseSqrt()));
}

}  // namespace

SymMatrix estimate_hessian_mc(const Vector& theta, const FeatureSampler& sampler, std::uint64_t m,
                              std::uint64_t seed, unsigned workers) {
  const auto shards = run_shards(theta, sampler, m, seed, workers, false);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(theta.size(), theta.size());
  for (const auto& s : shards) h += s.h;
  return SymMatrix(mirror_lower(h / static_cast<double>(m)));
}

CurvatureEstimate estimate_curvature_mc(const Vector& theta, const FeatureSampler& sampler,
                                        std::uint64_t m, std::uint64_t seed, unsigned workers) {
  const auto shards = run_shards(theta, sampler, m, seed, workers, true);
  const Index d = theta.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d), h_sq = h, s = h, s_sq = h, diff_sq = h;
  double loss = 0.0;
  for (const auto& sh : shards) {
    h += sh.h;
    h_sq += sh.h_sq;
    s += sh.s;
    s_sq += sh.s_sq;
    diff_sq += sh.diff_sq;
    loss += sh.loss;
  }
  const auto md = static_cast<double>(m);
  const Eigen::MatrixXd diff = s - h;
  return CurvatureEstimate{
      SymMatrix(mirror_lower(h / md)),
      SymMatrix(mirror_lower(s / md)),
      standard_error(h, h_sq, md),
      standard_error(s, s_sq, md),
      standard_error(diff, diff_sq, md),
      loss / md,
      m,
  };
}

SymMatrix estimate_sigma_mc(const Vector& theta, const FeatureSampler& sampler, std::uint64_t m,
                            std::uint64_t seed, unsigned workers) {
  return estimate_curvature_mc(theta, sampler, m, seed, workers).sigma;
}

QuadratureRule gauss_legendre_unit(int points) {
  if (points < 1) throw InvalidArgument("gauss_legendre_unit: need at least one point");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(points, points);
  for (int k = 1; k < points; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  QuadratureRule rule{Vector(points), Vector(points)};
  for (int k = 0; k < points; ++k) {
    const double v0 = eig.eigenvectors()(0, k);
    rule.nodes(k) = 0.5 * (eig.eigenvalues()(k) + 1.0);
    rule.weights(k) = v0 * v0;  // 2 v0^2 on [-1, 1], halved for [0, 1]
  }
  return rule;
}

SymMatrix hessian_quadrature_uniform(const Vector& theta, int points) {
  const Index d = theta.size();
  if (d < 1 || d > 2) throw InvalidArgument("hessian_quadrature_uniform: supports d = 1 or 2");
  if (!all_finite(theta)) throw NonFiniteInput("hessian_quadrature_uniform");
  const QuadratureRule rule = gauss_legendre_unit(points);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  Vector phi(d);
  if (d == 1) {
    for (int i = 0; i < points; ++i) {
      phi(0) = rule.nodes(i);
      h += rule.weights(i) * scalar::curvature(theta.dot(phi)) * phi * phi.transpose();
    }
  } else {
    for (int i = 0; i < points; ++i) {
      for (int j = 0; j < points; ++j) {
        phi << rule.nodes(i), rule.nodes(j);
        h += rule.weights(i) * rule.weights(j) * scalar::curvature(theta.dot(phi)) * phi * phi.transpose();
      }
    }
  }
  return SymMatrix(0.5 * (h + h.transpose()));
}

GroundTruth synthetic_ground_truth(const Vector& theta, const FeatureSampler& sampler,
                                   std::uint64_t m, std::uint64_t seed, unsigned workers) {
  auto est = estimate_curvature_mc(theta, sampler, m, seed, workers);
  SymMatrix inv = direct_inverse(est.hessian);
  return GroundTruth{theta,      est.hessian, inv, est.loss_mean, Provenance::SyntheticKnownTheta,
                     m,          est.hessian_se, theta.size()};
}

// --- empirical loss --------------------------------------------------------

double mean_loss(const Vector& theta, std::span<const Sample> samples) {
  if (samples.empty()) throw InvalidArgument("mean_loss: empty sample set");
  double total = 0.0;
  for (const auto& s : samples) total += loss(theta, s);
  return total / static_cast<double>(samples.size());
}

Vector mean_gradient(const Vector& theta, std::span<const Sample> samples) {
  if (samples.empty()) throw InvalidArgument("mean_gradient: empty sample set");
  Vector g = Vector::Zero(theta.size());
  for (const auto& s : samples) g += residual(theta, s) * s.phi;
  return g / static_cast<double>(samples.size());
}

namespace {

// (1/n) sum w(phi) phi phi^T, accumulated in blocks of rank updates.
template <class Weight>
SymMatrix mean_weighted_outer(std::span<const Sample> samples, Index d, Weight&& weight) {
  constexpr Index kBlock = 2048;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd block(kBlock, d);
  const auto n = static_cast<Index>(samples.size());
  for (Index start = 0; start < n; start += kBlock) {
    const Index rows = std::min(kBlock, n - start);
    for (Index r = 0; r < rows; ++r) {
      const auto& s = samples[static_cast<std::size_t>(start + r)];
      block.row(r) = std::sqrt(weight(s.phi)) * s.phi.transpose();
    }
    h.selfadjointView<Eigen::Lower>().rankUpdate(block.topRows(rows).transpose());
  }
  return SymMatrix(mirror_lower(h.triangularView<Eigen::Lower>()) / static_cast<double>(n));
}

SymMatrix mean_hessian(const Vector& theta, std::span<const Sample> samples) {
  return mean_weighted_outer(samples, theta.size(),
                             [&](const Vector& phi) { return scalar::curvature(theta.dot(phi)); });
}

// Orthonormal basis of the span of the features (one-hot blocks that each sum to one
// make the design rank deficient). Empty when the design has full rank.
Eigen::MatrixXd deficient_span(std::span<const Sample> samples, Index d, double rank_tol) {
  const SymMatrix gram = mean_weighted_outer(samples, d, [](const Vector&) { return 1.0; });
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram.dense());
  const Vector& values = eig.eigenvalues();  // ascending
  const double cutoff = rank_tol * values(d - 1);
  Index drop = 0;
  while (drop < d && values(drop) <= cutoff) ++drop;
  if (drop == 0) return {};
  if (drop == d) throw SingularMatrix("batch_newton_fit: all features vanish", std::numeric_limits<double>::infinity());
  return eig.eigenvectors().rightCols(d - drop);
}

SymMatrix project(const Eigen::MatrixXd& basis, const SymMatrix& m) {
  const Eigen::MatrixXd reduced = basis.transpose() * m.dense() * basis;
  return SymMatrix(0.5 * (reduced + reduced.transpose()));
}

// theta classifies every sample strictly correctly, so the data are separable and the
// loss has no finite minimiser.
bool separates(const Vector& theta, std::span<const Sample> samples) {
  return std::all_of(samples.begin(), samples.end(), [&](const Sample& s) {
    return std::abs(scalar::residual(theta.dot(s.phi), s.y)) < 0.5;
  });
}

// Curvature at theta relative to the feature second moment; diverges under separation
// even when the Hessian itself stays well conditioned (e.g. d = 1).
double relative_condition(const SymMatrix& hess, std::span<const Sample> samples) {
  double moment = 0.0;
  for (const auto& s : samples) moment += s.phi.squaredNorm();
  moment /= static_cast<double>(samples.size());
  const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hess.dense(), Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .minCoeff();
  return lmin > 0.0 ? moment / lmin : std::numeric_limits<double>::infinity();
}

}  // namespace

GroundTruth batch_newton_fit(std::span<const Sample> dataset, const NewtonOptions& options) {
  if (dataset.empty()) throw InvalidArgument("batch_newton_fit: empty dataset");
  const Index d = dataset.front().phi.size();
  for (const auto& s : dataset) {
    if (s.phi.size() != d) throw DimensionMismatch("batch_newton_fit", d, s.phi.size());
    validate_sample(s);
  }

  // Newton runs in coordinates of the feature span; theta* is the minimum-norm minimiser.
  const Eigen::MatrixXd basis = deficient_span(dataset, d, options.rank_tol);
  const bool reduced = basis.size() > 0;
  auto curvature = [&](const SymMatrix& hess) { return reduced ? project(basis, hess) : hess; };

  Vector theta = Vector::Zero(d);
  double current = mean_loss(theta, dataset);
  Vector grad = mean_gradient(theta, dataset);
  int iter = 0;
  for (; grad.norm() > options.tol; ++iter) {
    if (iter >= options.max_iter) {
      throw ConvergenceFailure("batch_newton_fit", grad.norm(), iter);
    }
    const SymMatrix hess = curvature(mean_hessian(theta, dataset));
    const Eigen::LLT<Eigen::MatrixXd> llt(hess.dense());
    const double cond = condition_estimate(hess);
    if (llt.info() != Eigen::Success || !(cond <= options.condition_cap)) {
      throw SingularMatrix("batch_newton_fit: empirical Hessian", cond);
    }
    const Vector step = reduced ? Vector(basis * llt.solve(basis.transpose() * grad)) : Vector(llt.solve(grad));

    double t = 1.0;
    Vector candidate = theta - step;
    double cand_loss = mean_loss(candidate, dataset);
    for (int h = 0; h < options.max_halvings && cand_loss > current; ++h) {
      t *= 0.5;
      candidate = theta - t * step;
      cand_loss = mean_loss(candidate, dataset);
    }
    if (cand_loss > current) throw ConvergenceFailure("batch_newton_fit: line search", grad.norm(), iter);
    theta = std::move(candidate);
    current = cand_loss;
    if (separates(theta, dataset)) {
      throw SingularMatrix("batch_newton_fit: perfectly separated data, empirical Hessian",
                           relative_condition(curvature(mean_hessian(theta, dataset)), dataset));
    }
    grad = mean_gradient(theta, dataset);
  }

  SymMatrix hess = mean_hessian(theta, dataset);
  SymMatrix inv = reduced ? SymMatrix(basis * direct_inverse(project(basis, hess), options.condition_cap).dense() *
                                      basis.transpose())
                          : direct_inverse(hess, options.condition_cap);
  GroundTruth out{theta, std::move(hess), std::move(inv), current, Provenance::BatchNewtonFit, dataset.size(),
                  std::nullopt};
  out.design_rank = reduced ? basis.cols() : d;
  return out;
}

double excess_risk(const Vector& theta, const GroundTruth& truth, std::span<const Sample> eval) {
  if (eval.empty()) throw InvalidArgument("excess_risk: empty evaluation set");
  if (theta.size() != truth.theta_star.size()) {
    throw DimensionMismatch("excess_risk", truth.theta_star.size(), theta.size());
  }
  return mean_loss(theta, eval) - mean_loss(truth.theta_star, eval);
}

// --- ExcessRiskEvaluator ---------------------------------------------------

ExcessRiskEvaluator::ExcessRiskEvaluator(Eigen::MatrixXd features, Vector targets, bool binary,
                                         const Vector& reference)
    : features_(std::move(features)), targets_(std::move(targets)), binary_(binary) {
  if (features_.rows() == 0) throw InvalidArgument("ExcessRiskEvaluator: empty evaluation set");
  if (reference.size() != features_.cols()) {
    throw DimensionMismatch("ExcessRiskEvaluator", features_.cols(), reference.size());
  }
  baseline_ = mean_risk(reference);
}

ExcessRiskEvaluator ExcessRiskEvaluator::empirical(std::span<const Sample> eval,
                                                   const Vector& reference) {
  if (eval.empty()) throw InvalidArgument("ExcessRiskEvaluator: empty evaluation set");
  const Index d = eval.front().phi.size();
  Eigen::MatrixXd x(static_cast<Index>(eval.size()), d);
  Vector t(static_cast<Index>(eval.size()));
  for (std::size_t i = 0; i < eval.size(); ++i) {
    if (eval[i].phi.size() != d) throw DimensionMismatch("ExcessRiskEvaluator", d, eval[i].phi.size());
    x.row(static_cast<Index>(i)) = eval[i].phi.transpose();
    t(static_cast<Index>(i)) = eval[i].y;
  }
  return ExcessRiskEvaluator(std::move(x), std::move(t), true, reference);
}

ExcessRiskEvaluator ExcessRiskEvaluator::conditional(const Vector& theta_true,
                                                     const FeatureSampler& sampler,
                                                     std::uint64_t m, std::uint64_t seed) {
  if (m == 0) throw InvalidArgument("ExcessRiskEvaluator: sample count must be >= 1");
  if (sampler.dim() != theta_true.size()) {
    throw DimensionMismatch("ExcessRiskEvaluator", theta_true.size(), sampler.dim());
  }
  const auto rows = static_cast<Index>(m);
  Eigen::MatrixXd x(rows, theta_true.size());
  Vector t(rows);
  CounterRng rng(derive_seed(seed, "risk-eval"));
  Vector phi;
  for (Index i = 0; i < rows; ++i) {
    sampler.draw(rng, phi);
    x.row(i) = phi.transpose();
    t(i) = sigmoid(theta_true.dot(phi));
  }
  return ExcessRiskEvaluator(std::move(x), std::move(t), false, theta_true);
}

double ExcessRiskEvaluator::mean_risk(const Vector& theta) const {
  if (theta.size() != features_.cols()) {
    throw DimensionMismatch("ExcessRiskEvaluator", features_.cols(), theta.size());
  }
  const Vector margins = features_ * theta;
  double total = 0.0;
  if (binary_) {
    for (Index i = 0; i < margins.size(); ++i) {
      total += scalar::loss(margins(i), static_cast<int>(targets_(i)));
    }
  } else {
    for (Index i = 0; i < margins.size(); ++i) {
      total += softplus(margins(i)) - margins(i) * targets_(i);
    }
  }
  return total / static_cast<double>(margins.size());
}

double ExcessRiskEvaluator::operator()(const Vector& theta) const {
  return mean_risk(theta) - baseline_;
}

}  // namespace hsn
