#include "hsn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "hsn/parallel.hpp"

namespace hsn {

std::uint64_t replication_seed(std::uint64_t stream_seed, std::uint64_t replication) {
  return derive_seed(stream_seed, "replication", replication);
}

double curvature_weight_sum(const OptimizerConfig& config) {
  switch (config.algorithm) {
    case Algorithm::HSN: return config.weights.sum();
    case Algorithm::ONS: return 1.0;
    case Algorithm::SN:
    case Algorithm::TSN: return 1.0;
    case Algorithm::SGD: return kNaN;
  }
  return kNaN;
}

// --- tracing -----------------------------------------------------------------

std::vector<RunRecord> trace_replication(const ExperimentConfig& config, std::uint64_t replication,
                                         const TraceOptions& options) {
  const Vector theta_true = gen_theta(config.spec);
  const Index d = theta_true.size();
  if (options.track_matrices && !options.truth) {
    throw InvalidArgument("trace_replication: matrix tracking needs a ground truth");
  }
  if (options.truth && options.truth->theta_star.size() != d) {
    throw DimensionMismatch("trace_replication: ground truth", d, options.truth->theta_star.size());
  }

  OptimizerState state = make_state(config.optimizer, d);
  auto stream = make_uniform_stream(theta_true, replication_seed(config.spec.stream_seed, replication),
                                    config.n);

  const bool second_order = is_second_order(config.optimizer.algorithm);
  const double weight_sum = curvature_weight_sum(config.optimizer);
  std::optional<SymMatrix> s_sum, h_sum, sig_sum;
  if (options.track_matrices) {
    h_sum = SymMatrix::zero(d);
    sig_sum = SymMatrix::zero(d);
    if (second_order) s_sum = SymMatrix::identity(d);
  }

  std::vector<RunRecord> records;
  StreamHooks hooks;
  hooks.cadence = config.cadence;
  if (options.track_matrices) {
    hooks.on_step = [&](const OptimizerState&, const Sample& s, const StepReport& rep) {
      rank1_accumulate_inplace(*h_sum, s.phi, rep.a);
      rank1_accumulate_inplace(*sig_sum, s.phi, rep.b);
      if (s_sum) rank1_accumulate_inplace(*s_sum, s.phi, rep.c);
    };
  }
  hooks.on_checkpoint = [&](const OptimizerState& st) {
    RunRecord rec;
    rec.iteration = st.n;
    rec.sq_error = (st.theta - theta_true).squaredNorm();
    if (options.risk) rec.excess_risk = (*options.risk)(st.theta);
    if (options.track_matrices && st.n > 0) {
      const GroundTruth& truth = *options.truth;
      const double inv_n = 1.0 / static_cast<double>(st.n);
      const SymMatrix hbar = h_sum->scaled(inv_n);
      const SymMatrix sigbar = sig_sum->scaled(inv_n);
      rec.hbar_dist = frobenius_distance(hbar, truth.hessian);
      rec.sigbar_dist = frobenius_distance(sigbar, truth.hessian);
      rec.hbar_sigbar_dist = frobenius_distance(hbar, sigbar);
      if (second_order) {
        rec.sbar_dist = frobenius_distance(s_sum->scaled(inv_n), truth.hessian.scaled(weight_sum));
        rec.sbar_inv_dist = frobenius_distance(st.s_inv->scaled(static_cast<double>(st.n)),
                                               truth.hessian_inv.scaled(1.0 / weight_sum));
      }
    }
    records.push_back(rec);
  };
  run_stream(std::move(state), stream, hooks);
  return records;
}

std::vector<std::vector<RunRecord>> trace_replications(const ExperimentConfig& config,
                                                       std::uint64_t count,
                                                       const TraceOptions& options,
                                                       std::uint64_t first) {
  std::vector<std::vector<RunRecord>> runs(count);
  parallel_for(count, config.workers, [&](std::size_t i) {
    try {
      runs[i] = trace_replication(config, first + i, options);
    } catch (const std::exception& e) {
      throw RunError("replication", first + i, e);
    }
  });
  return runs;
}

namespace {

template <class Value>
Series aggregate(const std::vector<std::vector<RunRecord>>& runs, Value&& value) {
  if (runs.empty()) throw InvalidArgument("aggregate: no replications");
  const auto& first = runs.front();
  Series out(first.size());
  for (std::size_t p = 0; p < first.size(); ++p) {
    double total = 0.0;
    for (const auto& run : runs) {
      if (run.size() != first.size() || run[p].iteration != first[p].iteration) {
        throw InvalidArgument("aggregate: replications have different checkpoints");
      }
      total += value(run[p]);
    }
    out[p] = {first[p].iteration, total / static_cast<double>(runs.size())};
  }
  return out;
}

}  // namespace

Series mean_series(const std::vector<std::vector<RunRecord>>& runs, double RunRecord::*field) {
  return aggregate(runs, [field](const RunRecord& r) { return r.*field; });
}

Series mean_squared_series(const std::vector<std::vector<RunRecord>>& runs,
                           double RunRecord::*field) {
  return aggregate(runs, [field](const RunRecord& r) { return (r.*field) * (r.*field); });
}

Series mse_curve(const ExperimentConfig& config, std::uint64_t replications, std::uint64_t first) {
  if (replications == 0) throw InvalidArgument("mse_curve: need at least one replication");
  return mean_series(trace_replications(config, replications, {}, first), &RunRecord::sq_error);
}

double rate_slope(const Series& series, std::uint64_t lo, std::uint64_t hi) {
  std::vector<double> xs, ys;
  for (const auto& p : series) {
    if (p.iteration < std::max<std::uint64_t>(lo, 1) || p.iteration > hi) continue;
    if (!(p.value > 0.0) || !std::isfinite(p.value)) {
      throw InvalidArgument("rate_slope: values in the window must be positive and finite");
    }
    xs.push_back(std::log(static_cast<double>(p.iteration)));
    ys.push_back(std::log(p.value));
  }
  if (xs.size() < 5) throw InvalidArgument("rate_slope: degenerate window (fewer than 5 points)");
  const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
  if (*mx - *mn < 2.0 * std::log(10.0) - 1e-12) {
    throw InvalidArgument("rate_slope: degenerate window (spans less than 2 decades)");
  }
  const double n = static_cast<double>(xs.size());
  const double mean_x = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double mean_y = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
    sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
  }
  return sxy / sxx;
}

// --- reports -----------------------------------------------------------------

DiagnosticCheck DiagnosticCheck::within(std::string name, double statistic, double target,
                                        double tolerance, std::string note) {
  DiagnosticCheck c;
  c.name = std::move(name);
  c.statistic = statistic;
  c.target = target;
  c.tolerance = tolerance;
  c.lower = target - tolerance;
  c.upper = target + tolerance;
  c.pass = std::abs(statistic - target) <= tolerance;
  c.note = std::move(note);
  return c;
}

DiagnosticCheck DiagnosticCheck::band(std::string name, double statistic, double target,
                                      double lower, double upper, std::string note) {
  DiagnosticCheck c;
  c.name = std::move(name);
  c.statistic = statistic;
  c.target = target;
  c.lower = lower;
  c.upper = upper;
  c.pass = statistic >= lower && statistic <= upper;
  c.note = std::move(note);
  return c;
}

bool DiagnosticReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

const DiagnosticCheck& DiagnosticReport::check(const std::string& check_name) const {
  for (const auto& c : checks) {
    if (c.name == check_name) return c;
  }
  throw InvalidArgument("DiagnosticReport: no check named '" + check_name + "'");
}

void require_unit_weight_sum(const OptimizerConfig& config, const char* where) {
  if (config.algorithm != Algorithm::HSN && config.algorithm != Algorithm::ONS) {
    throw InvalidArgument(std::string(where) + ": requires HSN or ONS");
  }
  const double sum = curvature_weight_sum(config);
  if (std::abs(sum - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << where << ": requires alpha + beta = 1 (got " << sum << ")";
    throw InvalidArgument(msg.str());
  }
}

namespace {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("quantile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

/// Relative Frobenius error of H^{-1} implied by the Monte-Carlo error of H,
/// through d(H^{-1}) = -H^{-1} dH H^{-1}.
double oracle_inverse_rel_error(const GroundTruth& truth) {
  if (!truth.hessian_se) return 0.0;
  const Eigen::MatrixXd& inv = truth.hessian_inv.dense();
  const Eigen::MatrixXd prop = inv.cwiseAbs() * truth.hessian_se->dense() * inv.cwiseAbs();
  return prop.norm() / inv.norm();
}

Eigen::MatrixXd lower_cholesky(const SymMatrix& m) {
  const Eigen::LLT<Eigen::MatrixXd> llt(m.dense());
  if (llt.info() != Eigen::Success) throw SingularMatrix("cholesky", condition_estimate(m));
  return llt.matrixL();
}

Vector standard_normal(CounterRng& rng, std::normal_distribution<double>& normal, Index d) {
  Vector xi(d);
  for (Index i = 0; i < d; ++i) xi(i) = normal(rng);
  return xi;
}

std::vector<Vector> final_thetas(const ExperimentConfig& config, std::uint64_t replications) {
  const Vector theta_true = gen_theta(config.spec);
  std::vector<Vector> out(replications);
  parallel_for(replications, config.workers, [&](std::size_t r) {
    auto stream = make_uniform_stream(theta_true, replication_seed(config.spec.stream_seed, r),
                                      config.n);
    StreamHooks hooks;
    hooks.checkpoint_initial = false;
    try {
      out[r] = run_stream(make_state(config.optimizer, theta_true.size()), stream, hooks).theta;
    } catch (const std::exception& e) {
      throw RunError("replication", r, e);
    }
  });
  return out;
}

std::vector<std::uint64_t> replication_seeds(const ExperimentConfig& config, std::uint64_t count) {
  std::vector<std::uint64_t> seeds;
  seeds.reserve(count);
  for (std::uint64_t r = 0; r < count; ++r) seeds.push_back(replication_seed(config.spec.stream_seed, r));
  return seeds;
}

}  // namespace

// --- CLT -------------------------------------------------------------------

CltStatistics clt_statistics(const std::vector<Vector>& scaled_errors, const GroundTruth& truth) {
  const std::size_t r = scaled_errors.size();
  if (r < 2) throw InvalidArgument("clt_statistics: need at least 2 replications");
  const Index d = truth.theta_star.size();
  Vector mean = Vector::Zero(d);
  for (const auto& z : scaled_errors) {
    if (z.size() != d) throw DimensionMismatch("clt_statistics", d, z.size());
    mean += z;
  }
  mean /= static_cast<double>(r);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  std::vector<double> maha(r);
  for (std::size_t i = 0; i < r; ++i) {
    const Vector c = scaled_errors[i] - mean;
    cov += c * c.transpose();
    maha[i] = scaled_errors[i].dot(truth.hessian * scaled_errors[i]);
  }
  cov /= static_cast<double>(r - 1);

  CltStatistics out;
  out.covariance_rel_error = (cov - truth.hessian_inv.dense()).norm() / truth.hessian_inv.frobenius_norm();
  out.mahalanobis_mean = std::accumulate(maha.begin(), maha.end(), 0.0) / static_cast<double>(r);
  out.mean_norm = mean.norm();

  std::sort(maha.begin(), maha.end());
  double ks = 0.0;
  const double half_d = 0.5 * static_cast<double>(d);
  for (std::size_t i = 0; i < r; ++i) {
    const double cdf = boost::math::gamma_p(half_d, 0.5 * maha[i]);
    ks = std::max({ks, static_cast<double>(i + 1) / static_cast<double>(r) - cdf,
                   cdf - static_cast<double>(i) / static_cast<double>(r)});
  }
  out.ks_chi2 = ks;
  return out;
}

std::vector<double> clt_null_errors(const GroundTruth& truth, std::uint64_t replications,
                                    std::uint64_t null_replicates, std::uint64_t seed) {
  const Eigen::MatrixXd chol = lower_cholesky(truth.hessian_inv);
  const Index d = truth.theta_star.size();
  std::vector<double> out(null_replicates);
  for (std::uint64_t j = 0; j < null_replicates; ++j) {
    CounterRng rng(derive_seed(seed, "clt-null", j));
    std::normal_distribution<double> normal;
    std::vector<Vector> draws(replications);
    for (auto& z : draws) z = chol * standard_normal(rng, normal, d);
    out[j] = clt_statistics(draws, truth).covariance_rel_error;
  }
  return out;
}

DiagnosticReport clt_diagnostic(const ExperimentConfig& config, const GroundTruth& truth,
                                const CltOptions& options) {
  require_unit_weight_sum(config.optimizer, "clt_diagnostic");
  if (options.replications < 100) throw InvalidArgument("clt_diagnostic: need at least 100 replications");
  if (config.n == 0) throw InvalidArgument("clt_diagnostic: horizon must be positive");

  const auto thetas = final_thetas(config, options.replications);
  const double root_n = std::sqrt(static_cast<double>(config.n));
  std::vector<Vector> scaled;
  scaled.reserve(thetas.size());
  for (const auto& t : thetas) scaled.push_back(root_n * (t - truth.theta_star));
  const CltStatistics stats = clt_statistics(scaled, truth);

  const auto null = clt_null_errors(truth, options.replications, options.null_replicates, options.null_seed);
  const double oracle_rel = oracle_inverse_rel_error(truth);
  const double cov_tol = quantile(null, options.null_quantile) + 3.0 * oracle_rel;
  const double d = static_cast<double>(truth.theta_star.size());
  const double r = static_cast<double>(options.replications);

  DiagnosticReport rep;
  rep.name = "clt";
  rep.replications = options.replications;
  rep.seeds = replication_seeds(config, options.replications);
  rep.checks.push_back(DiagnosticCheck::within(
      "covariance_rel_error", stats.covariance_rel_error, 0.0, cov_tol,
      "||Cov(sqrt(n)(theta_n - theta)) - H^-1||_F / ||H^-1||_F; tolerance = null quantile + 3 oracle error"));
  rep.checks.push_back(DiagnosticCheck::within(
      "mahalanobis_mean", stats.mahalanobis_mean, d, 4.0 * std::sqrt(2.0 * d / r),
      "mean of n (theta_n - theta)^T H (theta_n - theta); chi2(d) mean"));
  rep.info["null_quantile_value"] = quantile(null, options.null_quantile);
  rep.info["null_median"] = quantile(null, 0.5);
  rep.info["oracle_inverse_rel_error"] = oracle_rel;
  rep.info["mean_norm"] = stats.mean_norm;
  rep.info["ks_chi2"] = stats.ks_chi2;
  rep.info["ks_critical_5pct"] = 1.358 / std::sqrt(r);
  rep.info["horizon"] = static_cast<double>(config.n);
  return rep;
}

// --- QSL ---------------------------------------------------------------------

QslAccumulator::QslAccumulator(const GroundTruth& truth, const ExcessRiskEvaluator* risk,
                               std::vector<std::uint64_t> checkpoints, std::uint64_t exact_until,
                               double grid_step)
    : truth_(&truth),
      risk_(risk),
      checkpoints_(std::move(checkpoints)),
      exact_until_(exact_until),
      grid_step_(grid_step),
      next_grid_(exact_until + 1),
      outer_(Eigen::MatrixXd::Zero(truth.theta_star.size(), truth.theta_star.size())) {
  if (!(grid_step > 0.0)) throw InvalidArgument("QslAccumulator: grid_step must be positive");
  std::sort(checkpoints_.begin(), checkpoints_.end());
}

bool QslAccumulator::is_evaluation_point(std::uint64_t k) const {
  return k <= exact_until_ || k == next_grid_ ||
         std::binary_search(checkpoints_.begin(), checkpoints_.end(), k);
}

void QslAccumulator::add(std::uint64_t k, const Vector& theta_k) {
  if (k != k_ + 1) throw InvalidArgument("QslAccumulator: iterations must be fed in order");
  k_ = k;
  const Vector e = theta_k - truth_->theta_star;
  outer_.noalias() += e * e.transpose();
  if (risk_ && is_evaluation_point(k)) {
    excess_sum_ += static_cast<double>(k - last_eval_) * (*risk_)(theta_k);
    last_eval_ = k;
    if (k >= exact_until_) {
      const auto grid = static_cast<std::uint64_t>(std::ceil(static_cast<double>(k) * (1.0 + grid_step_)));
      next_grid_ = std::max(k + 1, grid);
    }
  }
  if (std::binary_search(checkpoints_.begin(), checkpoints_.end(), k)) {
    snapshots_.push_back({k, outer_rel_error(), cumulative_excess()});
  }
}

SymMatrix QslAccumulator::outer_sum() const { return SymMatrix(outer_); }

double QslAccumulator::outer_rel_error() const {
  if (k_ < 2) return kNaN;
  const double log_k = std::log(static_cast<double>(k_));
  return (outer_ / log_k - truth_->hessian_inv.dense()).norm() / truth_->hessian_inv.frobenius_norm();
}

double QslAccumulator::cumulative_excess() const {
  if (!risk_ || k_ < 2) return kNaN;
  return excess_sum_ / std::log(static_cast<double>(k_));
}

std::vector<double> qsl_null_errors(const GroundTruth& truth, std::uint64_t n,
                                    std::uint64_t null_replicates, std::uint64_t seed) {
  const Eigen::MatrixXd chol = lower_cholesky(truth.hessian_inv);
  const Index d = truth.theta_star.size();
  std::vector<double> out(null_replicates);
  for (std::uint64_t j = 0; j < null_replicates; ++j) {
    CounterRng rng(derive_seed(seed, "qsl-null", j));
    std::normal_distribution<double> normal;
    Vector noise_sum = Vector::Zero(d);
    Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(d, d);
    for (std::uint64_t k = 1; k <= n; ++k) {
      noise_sum += chol * standard_normal(rng, normal, d);
      const Vector e = noise_sum / static_cast<double>(k);
      outer.noalias() += e * e.transpose();
    }
    out[j] = (outer / std::log(static_cast<double>(n)) - truth.hessian_inv.dense()).norm() /
             truth.hessian_inv.frobenius_norm();
  }
  return out;
}

DiagnosticReport qsl_diagnostic(const ExperimentConfig& config, const GroundTruth& truth,
                                const QslOptions& options) {
  require_unit_weight_sum(config.optimizer, "qsl_diagnostic");
  if (options.validate && config.n < 10000) throw InvalidArgument("qsl_diagnostic: horizon must be >= 1e4");
  if (config.n < 2) throw InvalidArgument("qsl_diagnostic: horizon must be >= 2");
  const Vector theta_true = gen_theta(config.spec);
  if ((theta_true - truth.theta_star).norm() != 0.0) {
    throw InvalidArgument("qsl_diagnostic: ground truth does not match the synthetic model");
  }

  const UniformCubeSampler sampler(theta_true.size());
  const auto evaluator =
      ExcessRiskEvaluator::conditional(theta_true, sampler, options.risk_samples, options.risk_seed);

  std::vector<std::uint64_t> checkpoints;
  for (std::uint64_t p = 10; p < config.n; p *= 10) checkpoints.push_back(p);
  checkpoints.push_back(config.n);
  QslAccumulator acc(truth, &evaluator, checkpoints, options.exact_until, options.grid_step);

  const std::uint64_t seed = replication_seed(config.spec.stream_seed, options.replication);
  auto stream = make_uniform_stream(theta_true, seed, config.n);
  StreamHooks hooks;
  hooks.checkpoint_initial = false;
  hooks.on_step = [&](const OptimizerState& st, const Sample&, const StepReport&) {
    acc.add(st.n, st.theta);
  };
  run_stream(make_state(config.optimizer, theta_true.size()), stream, hooks);

  const auto null = qsl_null_errors(truth, config.n, options.null_replicates, options.null_seed);
  const double oracle_rel = oracle_inverse_rel_error(truth);
  const double d = static_cast<double>(theta_true.size());

  DiagnosticReport rep;
  rep.name = "qsl";
  rep.replications = 1;
  rep.seeds = {seed};
  rep.checks.push_back(DiagnosticCheck::within(
      "outer_product_rel_error", acc.outer_rel_error(), 0.0,
      quantile(null, options.null_quantile) + 3.0 * oracle_rel,
      "||(1/log n) sum (theta_k - theta)(theta_k - theta)^T - H^-1||_F / ||H^-1||_F; "
      "tolerance = running-mean Gaussian null quantile + 3 oracle error"));
  const double half_d = d / 2.0;
  rep.checks.push_back(DiagnosticCheck::band(
      "cumulative_excess_risk", acc.cumulative_excess(), half_d, 0.6 * half_d, 1.8 * half_d,
      "(1/log n) sum_k (G(theta_k) - G(theta)); target d/2"));
  // Trend: distance to d/2 at n against the earliest checkpoint at or above 1e3.
  const auto& snaps = acc.snapshots();
  const auto early = std::find_if(snaps.begin(), snaps.end(), [](const auto& s) { return s.k >= 1000; });
  if (early != snaps.end() && early->k < config.n) {
    const double gap_n = std::abs(acc.cumulative_excess() - half_d);
    const double gap_early = std::abs(early->cumulative_excess - half_d);
    DiagnosticCheck trend;
    trend.name = "cumulative_excess_trend";
    trend.statistic = gap_n - gap_early;
    trend.target = 0.0;
    trend.upper = 0.0;
    trend.lower = -std::numeric_limits<double>::infinity();
    trend.pass = trend.statistic < 0.0;
    trend.note = "|stat(n) - d/2| - |stat(" + std::to_string(early->k) + ") - d/2|; must be negative";
    rep.checks.push_back(trend);
  }
  rep.info["null_quantile_value"] = quantile(null, options.null_quantile);
  rep.info["null_median"] = quantile(null, 0.5);
  rep.info["oracle_inverse_rel_error"] = oracle_rel;
  rep.info["risk_eval_points"] = static_cast<double>(evaluator.size());
  rep.info["horizon"] = static_cast<double>(config.n);
  for (const auto& s : snaps) {
    rep.trend.push_back({s.k, {{"outer_rel_error", s.outer_rel_error},
                               {"cumulative_excess", s.cumulative_excess}}});
  }
  return rep;
}

// --- Hessian convergence -----------------------------------------------------

HessianConvergenceResult hessian_convergence(const ExperimentConfig& config,
                                             const GroundTruth& truth,
                                             std::uint64_t replications, RateWindow window) {
  if (replications == 0) throw InvalidArgument("hessian_convergence: need at least one replication");
  TraceOptions opts;
  opts.truth = &truth;
  opts.track_matrices = true;
  const auto runs = trace_replications(config, replications, opts);

  HessianConvergenceResult out;
  out.sbar_sq = mean_squared_series(runs, &RunRecord::sbar_dist);
  out.sbar_inv_sq = mean_squared_series(runs, &RunRecord::sbar_inv_dist);
  out.hbar_sq = mean_squared_series(runs, &RunRecord::hbar_dist);
  out.sigbar_sq = mean_squared_series(runs, &RunRecord::sigbar_dist);
  out.hbar_sigbar_sq = mean_squared_series(runs, &RunRecord::hbar_sigbar_dist);
  out.mse = mean_series(runs, &RunRecord::sq_error);

  auto& rep = out.report;
  rep.name = "hessian";
  rep.replications = replications;
  rep.seeds = replication_seeds(config, replications);
  const double sbar_slope = rate_slope(out.sbar_sq, window.lo, window.hi);
  rep.checks.push_back(DiagnosticCheck::band(
      "sbar_sq_slope", sbar_slope, -1.0, -1.2, -0.7,
      "log-log slope of mean ||S_n/n - (alpha+beta) H||_F^2; O(log n / n) expects about -1"));
  rep.info["sbar_inv_sq_slope"] = rate_slope(out.sbar_inv_sq, window.lo, window.hi);
  rep.info["hbar_sq_slope"] = rate_slope(out.hbar_sq, window.lo, window.hi);
  rep.info["sigbar_sq_slope"] = rate_slope(out.sigbar_sq, window.lo, window.hi);
  rep.info["hbar_sigbar_sq_slope"] = rate_slope(out.hbar_sigbar_sq, window.lo, window.hi);
  rep.info["mse_slope"] = rate_slope(out.mse, window.lo, window.hi);

  for (std::size_t p = 0; p < out.mse.size(); ++p) {
    rep.trend.push_back({out.mse[p].iteration,
                         {{"mse", out.mse[p].value},
                          {"sbar_sq", out.sbar_sq[p].value},
                          {"sbar_inv_sq", out.sbar_inv_sq[p].value},
                          {"hbar_sq", out.hbar_sq[p].value},
                          {"sigbar_sq", out.sigbar_sq[p].value},
                          {"hbar_sigbar_sq", out.hbar_sigbar_sq[p].value}}});
  }
  return out;
}

// --- comparisons -------------------------------------------------------------

std::string describe(const OptimizerConfig& config) {
  std::ostringstream s;
  s << to_string(config.algorithm);
  switch (config.algorithm) {
    case Algorithm::HSN: s << "(alpha=" << config.weights.alpha() << ",beta=" << config.weights.beta() << ")"; break;
    case Algorithm::TSN: s << "(nu0=" << config.truncation.floor_scale << ",gamma=" << config.truncation.exponent << ")"; break;
    case Algorithm::SGD: s << "(scale=" << config.step_scale << ")"; break;
    default: break;
  }
  return s.str();
}

std::vector<AlgorithmCurve> compare_algorithms(const ExperimentConfig& base,
                                               const std::vector<OptimizerConfig>& optimizers,
                                               std::uint64_t replications) {
  std::vector<AlgorithmCurve> out;
  for (const auto& opt : optimizers) {
    ExperimentConfig cfg = base;
    cfg.optimizer = opt;
    out.push_back({describe(opt), opt, mse_curve(cfg, replications)});
  }
  return out;
}

std::vector<std::string> final_ordering(const std::vector<AlgorithmCurve>& curves) {
  std::vector<const AlgorithmCurve*> sorted;
  for (const auto& c : curves) {
    if (!c.mse.empty()) sorted.push_back(&c);
  }
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return a->mse.back().value < b->mse.back().value;
  });
  std::vector<std::string> labels;
  for (const auto* c : sorted) labels.push_back(c->label);
  return labels;
}

// --- real data -----------------------------------------------------------------

namespace {

class OrderedSource {
 public:
  OrderedSource(std::span<const Sample> samples, const std::vector<std::size_t>& order)
      : samples_(samples), order_(order) {}
  bool next(Sample& out) {
    if (pos_ >= order_.size()) return false;
    out = samples_[order_[pos_++]];
    return true;
  }

 private:
  std::span<const Sample> samples_;
  const std::vector<std::size_t>& order_;
  std::size_t pos_ = 0;
};

}  // namespace

Series risk_curve(const OptimizerConfig& optimizer, std::span<const Sample> train,
                  const ExcessRiskEvaluator& evaluator, std::uint64_t replications,
                  const Cadence& cadence, std::uint64_t seed, unsigned workers) {
  if (train.empty()) throw InvalidArgument("risk_curve: empty training set");
  if (replications == 0) throw InvalidArgument("risk_curve: need at least one replication");
  const Index d = train.front().phi.size();
  std::vector<std::vector<RunRecord>> runs(replications);
  parallel_for(replications, workers, [&](std::size_t r) {
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng(derive_seed(seed, "order", r));
    std::shuffle(order.begin(), order.end(), rng);
    OrderedSource source(train, order);
    StreamHooks hooks;
    hooks.cadence = cadence;
    hooks.on_checkpoint = [&](const OptimizerState& st) {
      RunRecord rec;
      rec.iteration = st.n;
      rec.excess_risk = evaluator(st.theta);
      runs[r].push_back(rec);
    };
    try {
      run_stream(make_state(optimizer, d), source, hooks);
    } catch (const std::exception& e) {
      throw RunError("replication", r, e);
    }
  });
  return mean_series(runs, &RunRecord::excess_risk);
}

}  // namespace hsn
