#pragma once

// Replication orchestration and the asymptotic-law diagnostics: MSE and excess-risk
// curves, log-log rate slopes, the CLT covariance check, the quadratic strong law and
// cumulative excess risk, and convergence of the averaged curvature matrices.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hsn/data.hpp"
#include "hsn/optimizers.hpp"
#include "hsn/oracle.hpp"

namespace hsn {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Metrics of one run at one checkpoint. Unavailable quantities are NaN.
struct RunRecord {
  std::uint64_t iteration = 0;
  double sq_error = kNaN;
  double excess_risk = kNaN;
  double sbar_dist = kNaN;      // ||S_n / n - (alpha + beta) H||_F
  double sbar_inv_dist = kNaN;  // ||n S_n^{-1} - H^{-1} / (alpha + beta)||_F
  double hbar_dist = kNaN;      // ||H_n / n - H||_F
  double sigbar_dist = kNaN;    // ||Sigma_n / n - H||_F
  double hbar_sigbar_dist = kNaN;  // ||H_n / n - Sigma_n / n||_F
};

struct CurvePoint {
  std::uint64_t iteration = 0;
  double value = 0.0;
};
using Series = std::vector<CurvePoint>;

/// A synthetic experiment: optimizer settings, the model, horizon and checkpoints.
/// Replication r streams from derive_seed(spec.stream_seed, "replication", r).
struct ExperimentConfig {
  OptimizerConfig optimizer;
  SyntheticSpec spec;
  std::uint64_t n = 0;
  Cadence cadence = Cadence::powers_of_two();
  unsigned workers = 1;
};

std::uint64_t replication_seed(std::uint64_t stream_seed, std::uint64_t replication);

/// Limit of S_n / n is weight_sum(config) * Hessian.
double curvature_weight_sum(const OptimizerConfig& config);

/// What to measure along a traced run.
struct TraceOptions {
  const GroundTruth* truth = nullptr;         // needed for matrix distances
  const ExcessRiskEvaluator* risk = nullptr;  // needed for excess_risk
  bool track_matrices = false;                // accumulate H_n, Sigma_n, S_n
};

/// One replication of a synthetic experiment, recorded at the cadence (plus n = 0 and n).
std::vector<RunRecord> trace_replication(const ExperimentConfig& config, std::uint64_t replication,
                                         const TraceOptions& options = {});

/// Runs replications [first, first + count) in parallel; result index i is replication first + i.
std::vector<std::vector<RunRecord>> trace_replications(const ExperimentConfig& config,
                                                       std::uint64_t count,
                                                       const TraceOptions& options = {},
                                                       std::uint64_t first = 0);

/// Pointwise mean over replications of one RunRecord field.
Series mean_series(const std::vector<std::vector<RunRecord>>& runs, double RunRecord::*field);
/// Pointwise mean of the squared field.
Series mean_squared_series(const std::vector<std::vector<RunRecord>>& runs,
                           double RunRecord::*field);

/// Mean of ||theta_n - theta||^2 over replications [first, first + R).
Series mse_curve(const ExperimentConfig& config, std::uint64_t replications,
                 std::uint64_t first = 0);

/// Least-squares slope of log(value) against log(iteration) over iterations in [lo, hi].
/// Needs >= 5 positive points spanning >= 2 decades; throws InvalidArgument otherwise.
double rate_slope(const Series& series, std::uint64_t lo = 1,
                  std::uint64_t hi = std::numeric_limits<std::uint64_t>::max());

// --- reports ---------------------------------------------------------------

/// pass iff lower <= statistic <= upper. For symmetric checks lower and upper are
/// target -/+ tolerance; band checks leave tolerance NaN.
struct DiagnosticCheck {
  std::string name;
  double statistic = kNaN;
  double target = kNaN;
  double tolerance = kNaN;
  double lower = kNaN;
  double upper = kNaN;
  bool pass = false;
  std::string note;

  static DiagnosticCheck within(std::string name, double statistic, double target,
                                double tolerance, std::string note = {});
  static DiagnosticCheck band(std::string name, double statistic, double target, double lower,
                              double upper, std::string note = {});
};

struct TrendPoint {
  std::uint64_t iteration = 0;
  std::map<std::string, double> values;
};

struct DiagnosticReport {
  std::string name;
  std::vector<DiagnosticCheck> checks;
  std::map<std::string, double> info;  // informational values, not gating
  std::uint64_t replications = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<TrendPoint> trend;       // per-checkpoint values where relevant

  bool pass() const;
  const DiagnosticCheck& check(const std::string& name) const;
};

/// Throws InvalidArgument unless the algorithm is HSN or ONS with alpha + beta = 1 (1e-12).
void require_unit_weight_sum(const OptimizerConfig& config, const char* where);

// --- CLT ---------------------------------------------------------------------

struct CltOptions {
  std::uint64_t replications = 500;
  std::uint64_t null_replicates = 1000;  // null simulations for the covariance tolerance
  double null_quantile = 0.99;
  std::uint64_t null_seed = 0x5eed;
};

/// Covariance and Mahalanobis statistics from already-computed scaled errors sqrt(n)(theta_n - theta).
struct CltStatistics {
  double covariance_rel_error = kNaN;
  double mahalanobis_mean = kNaN;
  double mean_norm = kNaN;
  double ks_chi2 = kNaN;  // Kolmogorov-Smirnov distance of the Mahalanobis values to chi2(d)
};
CltStatistics clt_statistics(const std::vector<Vector>& scaled_errors, const GroundTruth& truth);

/// Null distribution of the covariance relative error for `replications` draws from N(0, H^{-1}).
std::vector<double> clt_null_errors(const GroundTruth& truth, std::uint64_t replications,
                                    std::uint64_t null_replicates, std::uint64_t seed);

DiagnosticReport clt_diagnostic(const ExperimentConfig& config, const GroundTruth& truth,
                                const CltOptions& options = {});

// --- quadratic strong law ----------------------------------------------------

/**
 * Online sums for (1/log n) sum_k (theta_k - theta)(theta_k - theta)^T and
 * (1/log n) sum_k (G(theta_k) - G(theta)).
 *
 * The outer-product sum takes every k. The excess risk is evaluated at every k up
 * to `exact_until` and then on a geometric grid of ratio (1 + grid_step), each value
 * weighted by the number of iterations since the previous evaluation. Checkpoints
 * are always evaluation points.
 */
class QslAccumulator {
 public:
  QslAccumulator(const GroundTruth& truth, const ExcessRiskEvaluator* risk,
                 std::vector<std::uint64_t> checkpoints, std::uint64_t exact_until = 1000,
                 double grid_step = 0.01);

  /// Feed theta_k for k = 1, 2, ... in order.
  void add(std::uint64_t k, const Vector& theta_k);

  std::uint64_t count() const noexcept { return k_; }
  /// ||(1/log k) sum outer - H^{-1}||_F / ||H^{-1}||_F at the current k.
  double outer_rel_error() const;
  /// (1/log k) * cumulative excess risk at the current k.
  double cumulative_excess() const;
  SymMatrix outer_sum() const;
  double excess_sum() const noexcept { return excess_sum_; }

  /// (k, outer_rel_error, cumulative_excess) captured at each checkpoint.
  struct Snapshot {
    std::uint64_t k;
    double outer_rel_error;
    double cumulative_excess;
  };
  const std::vector<Snapshot>& snapshots() const noexcept { return snapshots_; }

  bool is_evaluation_point(std::uint64_t k) const;

 private:
  const GroundTruth* truth_;
  const ExcessRiskEvaluator* risk_;
  std::vector<std::uint64_t> checkpoints_;
  std::uint64_t exact_until_;
  double grid_step_;
  std::uint64_t next_grid_;
  std::uint64_t last_eval_ = 0;
  std::uint64_t k_ = 0;
  Eigen::MatrixXd outer_;
  double excess_sum_ = 0.0;
  std::vector<Snapshot> snapshots_;
};

struct QslOptions {
  std::uint64_t risk_samples = 100000;  // evaluation features for G
  std::uint64_t risk_seed = 0x715c;
  std::uint64_t exact_until = 1000;
  double grid_step = 0.01;
  std::uint64_t null_replicates = 200;
  double null_quantile = 0.99;
  std::uint64_t null_seed = 0x5eed;
  std::uint64_t replication = 0;
  bool validate = true;  // enforce the n >= 1e4 precondition
};

/// Running-mean Gaussian trajectories e_k = (1/k) sum_{i<=k} xi_i, xi ~ N(0, H^{-1}):
/// distribution of the outer-sum relative error at horizon n.
std::vector<double> qsl_null_errors(const GroundTruth& truth, std::uint64_t n,
                                    std::uint64_t null_replicates, std::uint64_t seed);

DiagnosticReport qsl_diagnostic(const ExperimentConfig& config, const GroundTruth& truth,
                                const QslOptions& options = {});

// --- averaged curvature matrices ---------------------------------------------

struct HessianConvergenceResult {
  DiagnosticReport report;
  Series sbar_sq;      // mean over replications of sbar_dist^2
  Series sbar_inv_sq;
  Series hbar_sq;
  Series sigbar_sq;
  Series hbar_sigbar_sq;
  Series mse;          // mean sq_error from the same runs
};

struct RateWindow {
  std::uint64_t lo = 1000;
  std::uint64_t hi = 100000;
};

HessianConvergenceResult hessian_convergence(const ExperimentConfig& config,
                                             const GroundTruth& truth,
                                             std::uint64_t replications,
                                             RateWindow window = {});

// --- comparisons and real data -----------------------------------------------

struct AlgorithmCurve {
  std::string label;
  OptimizerConfig optimizer;
  Series mse;
};

/// Same model, seeds and checkpoints for every optimizer configuration.
std::vector<AlgorithmCurve> compare_algorithms(const ExperimentConfig& base,
                                               const std::vector<OptimizerConfig>& optimizers,
                                               std::uint64_t replications);

/// Labels sorted by final MSE, best first.
std::vector<std::string> final_ordering(const std::vector<AlgorithmCurve>& curves);

std::string describe(const OptimizerConfig& config);

/**
 * Excess risk on a held-out set along one pass over the training data.
 * Replication r visits the training samples in the order of a shuffle seeded by
 * derive_seed(seed, "order", r); the evaluation set stays fixed.
 */
Series risk_curve(const OptimizerConfig& optimizer, std::span<const Sample> train,
                  const ExcessRiskEvaluator& evaluator, std::uint64_t replications,
                  const Cadence& cadence, std::uint64_t seed, unsigned workers = 1);

}  // namespace hsn
