#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "hsn/data.hpp"
#include "hsn/optimizers.hpp"

namespace hsn {
namespace {

using testing::Gen;

OptimizerConfig config(Algorithm a, double alpha = 0.5, double beta = 0.5) {
  OptimizerConfig c;
  c.algorithm = a;
  c.weights = HybridWeights(alpha, beta);
  return c;
}

Sample one(int y) { return {Vector::Ones(1), y}; }

std::vector<Sample> random_stream(std::uint64_t seed, Index d, std::uint64_t n) {
  auto stream = make_uniform_stream(Vector::LinSpaced(d, -2.0, 2.0), seed, n);
  std::vector<Sample> out;
  Sample s;
  while (stream.next(s)) out.push_back(s);
  return out;
}

TEST(HsnStep, HandExampleScalar) {
  auto st = make_state(config(Algorithm::HSN), 1);
  const auto rep = hsn_step(st, one(1));
  EXPECT_EQ(rep.a, 0.25);
  EXPECT_EQ(rep.b, 0.25);
  EXPECT_EQ(rep.c, 0.25);
  EXPECT_EQ(rep.g, 0.25);
  EXPECT_NEAR((*st.s_inv)(0, 0), 0.8, 1e-15);
  EXPECT_NEAR(st.theta(0), 0.4, 1e-15);
  EXPECT_EQ(st.n, 1u);
  // Cross-check against direct inversion of S_1 = 1 + 0.25.
  EXPECT_NEAR((*st.s_inv)(0, 0), 1.0 / 1.25, 1e-15);
}

TEST(OnsStep, HandExampleScalar) {
  auto st = make_state(config(Algorithm::ONS), 1);
  const auto rep = ons_step(st, one(1));
  EXPECT_EQ(rep.b, 0.25);
  EXPECT_EQ(rep.c, 0.25);
  EXPECT_NEAR(st.theta(0), 0.4, 1e-15);
}

TEST(SnStep, HandExampleScalar) {
  auto st = make_state(config(Algorithm::SN), 1);
  const auto rep = sn_step(st, one(1));
  EXPECT_EQ(rep.c, 0.25);
  EXPECT_NEAR((*st.s_inv)(0, 0), 0.8, 1e-15);
  EXPECT_NEAR(st.theta(0), 0.4, 1e-15);
}

TEST(SnStep, SaturatedMarginLeavesInverseNearlyUnchanged) {
  auto c = config(Algorithm::SN);
  c.initial_theta = Vector::Constant(1, 40.0);
  auto st = make_state(c, 1);
  const auto rep = sn_step(st, one(1));
  EXPECT_LT(rep.c, 1e-16);
  EXPECT_NEAR((*st.s_inv)(0, 0), 1.0, 1e-16);
}

TEST(SgdStep, HandExampleScalar) {
  auto st = make_state(config(Algorithm::SGD), 1);
  sgd_step(st, one(1));
  EXPECT_EQ(st.theta(0), 0.5);
  EXPECT_FALSE(st.s_inv.has_value());
}

TEST(SgdStep, StepMagnitude) {
  Gen gen(1);
  auto st = make_state(config(Algorithm::SGD), 4);
  for (int k = 0; k < 50; ++k) {
    const Sample s{gen.vector(4), gen.integer(0, 1)};
    const Vector before = st.theta;
    const double r = residual(before, s);
    const auto n_before = st.n;
    const auto rep = sgd_step(st, s);
    ASSERT_NEAR((st.theta - before).norm(), s.phi.norm() * std::abs(r) / static_cast<double>(n_before + 1), 1e-14);
    ASSERT_NEAR(rep.theta_delta_norm, (st.theta - before).norm(), 1e-14);
  }
}

TEST(SgdStep, SaturatedResidualIsNoOp) {
  auto c = config(Algorithm::SGD);
  c.initial_theta = Vector::Constant(1, 800.0);
  auto st = make_state(c, 1);
  sgd_step(st, one(1));
  EXPECT_EQ(st.theta(0), 800.0);
}

TEST(TsnStep, ClampInactiveAndActive) {
  TruncationSchedule sched;
  EXPECT_NEAR(sched.floor_at(100), std::pow(100.0, -0.49), 1e-16);

  auto low_floor = config(Algorithm::TSN);
  low_floor.truncation = {0.01, 0.49};
  auto st = make_state(low_floor, 1);
  EXPECT_EQ(tsn_step(st, one(1)).c, 0.25);

  // Default floor at k = 1 is 1 > a = 0.25.
  auto first = make_state(config(Algorithm::TSN), 1);
  EXPECT_EQ(tsn_step(first, one(1)).c, 1.0);

  // a = 1e-9 at the 100th sample: c equals the floor 100^-0.49.
  auto c = config(Algorithm::TSN);
  c.initial_theta = Vector::Constant(1, std::log(1e9));
  auto late = make_state(c, 1);
  late.n = 99;
  const auto rep2 = tsn_step(late, one(1));
  EXPECT_NEAR(rep2.a, 1e-9, 1e-12);
  EXPECT_EQ(rep2.c, std::pow(100.0, -0.49));
}

TEST(TsnStep, EqualsSnWhenClampNeverActive) {
  auto tsn_cfg = config(Algorithm::TSN);
  tsn_cfg.truncation = {1e-6, 0.49};
  auto tsn = make_state(tsn_cfg, 3);
  auto sn = make_state(config(Algorithm::SN), 3);
  for (const auto& s : random_stream(5, 3, 2000)) {
    const auto r1 = tsn_step(tsn, s);
    const auto r2 = sn_step(sn, s);
    ASSERT_GT(r2.a, 1e-6);
    ASSERT_EQ(r1.c, r2.c);
  }
  EXPECT_EQ(tsn.theta, sn.theta);
  EXPECT_EQ(*tsn.s_inv, *sn.s_inv);
}

TEST(TruncationSchedule, Validation) {
  EXPECT_THROW((TruncationSchedule{0.0, 0.49}.validate()), InvalidArgument);
  EXPECT_THROW((TruncationSchedule{1.0, 0.0}.validate()), InvalidArgument);
  EXPECT_THROW((TruncationSchedule{1.0, 0.6}.validate()), InvalidArgument);
  EXPECT_NO_THROW((TruncationSchedule{1.0, 0.5}.validate()));
  TruncationSchedule s;
  for (std::uint64_t k = 1; k < 1000; ++k) ASSERT_LE(s.floor_at(k + 1), s.floor_at(k));
}

TEST(Step, ZeroFeatureIsNoOp) {
  for (auto a : {Algorithm::HSN, Algorithm::ONS, Algorithm::SN, Algorithm::TSN}) {
    auto st = make_state(config(a), 3);
    const auto rep = step(st, {Vector::Zero(3), 1});
    EXPECT_EQ(rep.g, 0.0);
    EXPECT_EQ(st.theta, Vector::Zero(3));
    EXPECT_EQ(*st.s_inv, SymMatrix::identity(3));
  }
}

TEST(Step, Preconditions) {
  auto st = make_state(config(Algorithm::HSN), 2);
  EXPECT_THROW(step(st, {Vector::Ones(3), 1}), DimensionMismatch);
  EXPECT_THROW(step(st, {Vector::Ones(2), 5}), InvalidArgument);
  EXPECT_THROW(ons_step(st, {Vector::Ones(2), 1}), InvalidArgument);
  EXPECT_EQ(st.n, 0u);
}

TEST(Step, NonFiniteGuardReportsStep) {
  auto c = config(Algorithm::SGD);
  c.step_scale = 1e308;
  auto st = make_state(c, 1);
  st.n = 0;
  try {
    step(st, {Vector::Constant(1, 1e10), 1});
    FAIL() << "expected NonFiniteState";
  } catch (const NonFiniteState& e) {
    EXPECT_EQ(e.step(), 1u);
  }
}

TEST(HsnStep, RandomStepMatchesDirectInversion) {
  Gen gen(2);
  for (int t = 0; t < 100; ++t) {
    auto st = make_state(config(Algorithm::HSN, gen.uniform(0, 1), gen.uniform(0.1, 1)), 5);
    st.theta = gen.vector(5);
    st.s_inv = direct_inverse(SymMatrix(gen.spd(5)));
    const SymMatrix s = direct_inverse(*st.s_inv);
    const Sample sample{gen.vector(5), gen.integer(0, 1)};
    const Vector theta0 = st.theta;
    const auto rep = hsn_step(st, sample);
    const Eigen::MatrixXd s_new = s.dense() + rep.c * sample.phi * sample.phi.transpose();
    const Eigen::MatrixXd expected = s_new.fullPivLu().inverse();
    ASSERT_LE((st.s_inv->dense() - expected).norm(), 1e-9 * expected.norm());
    const Vector expected_theta = theta0 - expected * sample.phi * residual(theta0, sample);
    ASSERT_LE((st.theta - expected_theta).norm(), 1e-9 * (1.0 + expected_theta.norm()));
    ASSERT_NEAR(rep.c, coeff_c(rep.a, rep.b, st.weights), 0.0);
  }
}

TEST(OptimizersProperty, OnsIsBitIdenticalToHsn01) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto ons = make_state(config(Algorithm::ONS), 4);
    auto hsn = make_state(config(Algorithm::HSN, 0.0, 1.0), 4);
    for (const auto& s : random_stream(seed, 4, 3000)) {
      const auto r1 = step(ons, s);
      const auto r2 = step(hsn, s);
      ASSERT_EQ(r1.c, r2.c);
      ASSERT_EQ(r1.g, r2.g);
    }
    EXPECT_EQ(ons.theta, hsn.theta);
    EXPECT_EQ(*ons.s_inv, *hsn.s_inv);
  }
}

TEST(OptimizersProperty, ShiftRelationAndEigenvalueBound) {
  for (auto algo : {Algorithm::HSN, Algorithm::ONS, Algorithm::SN, Algorithm::TSN}) {
    auto st = make_state(config(algo), 4);
    std::uint64_t k = 0;
    for (const auto& s : random_stream(11, 4, 3000)) {
      const Vector before = *st.s_inv * s.phi;
      const auto rep = step(st, s);
      const Vector after = *st.s_inv * s.phi;
      ASSERT_LE((after - before / (1.0 + rep.g)).cwiseAbs().maxCoeff(), 1e-12);
      if (++k % 500 == 0) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(st.s_inv->dense());
        ASSERT_GT(eig.eigenvalues().minCoeff(), 0.0);
        ASSERT_LE(eig.eigenvalues().maxCoeff(), 1.0 + 1e-12);
      }
    }
  }
}

// phi_k = e_k keeps every margin at 0 (theta only moves along used coordinates and
// S^{-1} stays diagonal), so a = b = 1/4 and any split with alpha + beta = 1 gives c = 1/4.
TEST(OptimizersProperty, UnitSplitInvariantWhenAEqualsB) {
  const Index d = 40;
  Gen gen(12);
  std::vector<Sample> stream;
  for (Index k = 0; k < d; ++k) stream.push_back({Vector::Unit(d, k) * gen.uniform(0.5, 2.0), gen.integer(0, 1)});
  auto reference = make_state(config(Algorithm::HSN, 0.0, 1.0), d);
  for (const auto& s : stream) step(reference, s);
  for (double alpha : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    auto st = make_state(config(Algorithm::HSN, alpha, 1.0 - alpha), d);
    for (const auto& s : stream) {
      const auto rep = step(st, s);
      ASSERT_EQ(rep.a, 0.25);
      ASSERT_EQ(rep.b, 0.25);
    }
    EXPECT_EQ(st.theta, reference.theta);
    EXPECT_EQ(*st.s_inv, *reference.s_inv);
  }
}

TEST(OptimizersProperty, SbarReconstructionFromRecordedWeights) {
  for (auto algo : {Algorithm::HSN, Algorithm::SN}) {
    auto st = make_state(config(algo), 6);
    SymMatrix s = SymMatrix::identity(6);
    StreamHooks hooks;
    hooks.on_step = [&](const OptimizerState&, const Sample& sample, const StepReport& rep) {
      rank1_accumulate_inplace(s, sample.phi, rep.c);
    };
    auto samples = random_stream(13, 6, 10000);
    SpanSource src(samples);
    st = run_stream(std::move(st), src, hooks);
    const SymMatrix from_inverse = direct_inverse(*st.s_inv, 1e14);
    EXPECT_LE(frobenius_distance(s, from_inverse) / s.frobenius_norm(), 1e-8);
  }
}

TEST(RunStream, EmptySourceReturnsInitialState) {
  auto st = make_state(config(Algorithm::HSN), 2);
  std::vector<Sample> none;
  SpanSource src(none);
  int checkpoints = 0;
  StreamHooks hooks;
  hooks.on_checkpoint = [&](const OptimizerState& s) {
    EXPECT_EQ(s.n, 0u);
    ++checkpoints;
  };
  const auto out = run_stream(st, src, hooks);
  EXPECT_EQ(out.n, 0u);
  EXPECT_EQ(out.theta, st.theta);
  EXPECT_EQ(checkpoints, 1);
}

TEST(RunStream, CheckpointsAtCadenceAndFinalStep) {
  auto samples = random_stream(3, 2, 100);
  SpanSource src(samples);
  std::vector<std::uint64_t> seen;
  StreamHooks hooks;
  hooks.on_checkpoint = [&](const OptimizerState& s) { seen.push_back(s.n); };
  run_stream(make_state(config(Algorithm::HSN), 2), src, hooks);
  EXPECT_EQ(seen, (std::vector<std::uint64_t>{0, 1, 2, 4, 8, 16, 32, 64, 100}));
}

TEST(RunStream, DeterministicAndWrapsErrorsWithIndex) {
  auto samples = random_stream(4, 3, 500);
  SpanSource a(samples), b(samples);
  const auto s1 = run_stream(make_state(config(Algorithm::HSN), 3), a);
  const auto s2 = run_stream(make_state(config(Algorithm::HSN), 3), b);
  EXPECT_EQ(s1.theta, s2.theta);

  samples[10].y = 7;
  SpanSource bad(samples);
  try {
    run_stream(make_state(config(Algorithm::HSN), 3), bad);
    FAIL() << "expected RunError";
  } catch (const RunError& e) {
    EXPECT_EQ(e.index(), 11u);
  }
}

TEST(Cadence, GridsAndParsing) {
  EXPECT_EQ(Cadence::powers_of_two().points_up_to(10), (std::vector<std::uint64_t>{1, 2, 4, 8, 10}));
  EXPECT_EQ(Cadence::every(3).points_up_to(10), (std::vector<std::uint64_t>{3, 6, 9, 10}));
  EXPECT_EQ(Cadence::at({5, 1, 5}).points_up_to(4), (std::vector<std::uint64_t>{1, 4}));
  const auto grid = Cadence::log_grid(1).points_up_to(1000);
  EXPECT_EQ(grid, (std::vector<std::uint64_t>{1, 10, 100, 1000}));
  for (const auto p : Cadence::log_grid(10).points_up_to(100000)) EXPECT_TRUE(Cadence::log_grid(10).contains(p));
  for (const char* text : {"pow2", "log:10", "every:250", "at:1,10,100"}) {
    EXPECT_EQ(Cadence::parse(text).describe(), text);
  }
  EXPECT_THROW(Cadence::parse("weekly"), InvalidArgument);
  EXPECT_THROW(Cadence::parse("every:0"), InvalidArgument);
  EXPECT_THROW(Cadence::parse("at:1,,2"), InvalidArgument);
}

TEST(Algorithm, ParseAndNames) {
  EXPECT_EQ(parse_algorithm("hsn"), Algorithm::HSN);
  EXPECT_EQ(parse_algorithm("TSN"), Algorithm::TSN);
  EXPECT_THROW(parse_algorithm("adam"), InvalidArgument);
  EXPECT_EQ(to_string(Algorithm::ONS), "ONS");
  EXPECT_FALSE(is_second_order(Algorithm::SGD));
}

}  // namespace
}  // namespace hsn
