#pragma once

// Ground-truth quantities for diagnostics: Monte-Carlo Hessian and gradient-covariance
// estimates at a known parameter, and a damped batch Newton reference fit for datasets.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "hsn/data.hpp"
#include "hsn/linalg.hpp"
#include "hsn/model.hpp"

namespace hsn {

enum class Provenance { SyntheticKnownTheta, BatchNewtonFit };
std::string_view to_string(Provenance p) noexcept;

struct GroundTruth {
  Vector theta_star;
  SymMatrix hessian;
  SymMatrix hessian_inv;
  double g_at_star = 0.0;
  Provenance provenance = Provenance::SyntheticKnownTheta;
  std::uint64_t mc_samples = 0;
  /// Per-entry Monte-Carlo standard error of `hessian` (synthetic truths only).
  std::optional<SymMatrix> hessian_se;
  /// Dimension of the feature span; below dim when the design is rank deficient.
  Index design_rank = 0;
};

/// Monte-Carlo work is split into this many seeded shards whatever the worker count.
inline constexpr unsigned kMonteCarloShards = 64;

/// (1/m) sum a_i phi_i phi_i^T with a_i = coeff_a(theta, phi_i). Deterministic per seed.
SymMatrix estimate_hessian_mc(const Vector& theta, const FeatureSampler& sampler, std::uint64_t m,
                              std::uint64_t seed, unsigned workers = 1);

/// (1/m) sum (pi(theta^T phi_i) - y_i)^2 phi_i phi_i^T with y_i ~ Bernoulli(pi(theta^T phi_i)).
/// Uses the same feature draws as estimate_hessian_mc for an equal seed.
SymMatrix estimate_sigma_mc(const Vector& theta, const FeatureSampler& sampler, std::uint64_t m,
                            std::uint64_t seed, unsigned workers = 1);

/// Both estimates from shared draws, with per-entry standard errors.
struct CurvatureEstimate {
  SymMatrix hessian;
  SymMatrix sigma;
  SymMatrix hessian_se;
  SymMatrix sigma_se;
  SymMatrix difference_se;  // of sigma - hessian, paired per draw
  double loss_mean = 0.0;   // E[softplus(m) - m pi(m)] at theta, i.e. G(theta)
  std::uint64_t samples = 0;
};

CurvatureEstimate estimate_curvature_mc(const Vector& theta, const FeatureSampler& sampler,
                                        std::uint64_t m, std::uint64_t seed, unsigned workers = 1);

/// Gauss-Legendre nodes and weights on [0, 1] (Golub-Welsch).
struct QuadratureRule {
  Vector nodes;
  Vector weights;
};
QuadratureRule gauss_legendre_unit(int points);

/// Tensor-grid quadrature of E[pi(1 - pi)(theta^T phi) phi phi^T] for phi uniform on [0,1]^d,
/// d <= 2. Deterministic cross-check of the Monte-Carlo path.
SymMatrix hessian_quadrature_uniform(const Vector& theta, int points = 200);

/// Ground truth for a synthetic model with known theta.
GroundTruth synthetic_ground_truth(const Vector& theta, const FeatureSampler& sampler,
                                   std::uint64_t m, std::uint64_t seed, unsigned workers = 1);

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 100;
  int max_halvings = 50;
  double condition_cap = kDefaultConditionCap;
  /// Feature-span directions with second-moment eigenvalue below rank_tol times the
  /// largest are treated as absent.
  double rank_tol = 1e-10;
};

/**
 * Damped Newton on the mean per-sample loss, started at the origin.
 *
 * Returns theta*, the empirical Hessian at theta* and its inverse, and the
 * empirical loss at theta*. For a rank-deficient design (e.g. several one-hot
 * blocks) the iteration is restricted to the feature span: theta* is the
 * minimum-norm minimiser and hessian_inv the pseudo-inverse on that span.
 * Throws ConvergenceFailure after max_iter and SingularMatrix when the
 * curvature degenerates (perfect separation).
 */
GroundTruth batch_newton_fit(std::span<const Sample> dataset, const NewtonOptions& options = {});

/// Mean loss of theta on eval minus mean loss of truth.theta_star on the same set.
double excess_risk(const Vector& theta, const GroundTruth& truth, std::span<const Sample> eval);

/// Mean loss and gradient over a sample set.
double mean_loss(const Vector& theta, std::span<const Sample> samples);
Vector mean_gradient(const Vector& theta, std::span<const Sample> samples);

/**
 * Repeated excess-risk evaluation against a fixed reference on a fixed feature set.
 *
 * `empirical` uses observed labels. `conditional` integrates the label out through
 * E[Y | phi] = pi(theta_true^T phi), which removes label noise for synthetic models.
 */
class ExcessRiskEvaluator {
 public:
  static ExcessRiskEvaluator empirical(std::span<const Sample> eval, const Vector& reference);
  static ExcessRiskEvaluator conditional(const Vector& theta_true, const FeatureSampler& sampler,
                                         std::uint64_t m, std::uint64_t seed);

  double operator()(const Vector& theta) const;
  double reference_risk() const noexcept { return baseline_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(features_.rows()); }

 private:
  ExcessRiskEvaluator(Eigen::MatrixXd features, Vector targets, bool binary, const Vector& reference);
  double mean_risk(const Vector& theta) const;

  Eigen::MatrixXd features_;  // one row per evaluation point
  Vector targets_;            // labels or conditional probabilities
  bool binary_;
  double baseline_ = 0.0;
};

}  // namespace hsn
