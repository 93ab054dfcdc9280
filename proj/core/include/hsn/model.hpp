#pragma once

// Logistic-regression primitives: the link function, the per-sample curvature (a),
// squared-residual (b) and hybrid (c) weights, the residual, and the log-loss.

#include <cstdint>
#include <optional>

#include "hsn/linalg.hpp"

namespace hsn {

/// Mixing weights (alpha, beta) of the hybrid curvature estimate c = alpha a + beta b.
class HybridWeights {
 public:
  /// Throws InvalidArgument unless alpha >= 0, beta > 0 and both are finite.
  HybridWeights(double alpha, double beta);

  static HybridWeights online_newton_step() { return {0.0, 1.0}; }

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  double sum() const noexcept { return alpha_ + beta_; }

  bool operator==(const HybridWeights&) const = default;

 private:
  double alpha_;
  double beta_;
};

/// One observation: features phi and a label in {0, 1}.
struct Sample {
  Vector phi;
  int y = 0;
};

/// Throws unless y is 0 or 1 and phi is finite. With `norm_bound`, also enforces ||phi|| <= bound.
void validate_sample(const Sample& s, std::optional<double> norm_bound = std::nullopt);

/// Logistic function e^x / (1 + e^x), evaluated without overflow. Throws NonFiniteInput.
double sigmoid(double x);

/// log(1 + e^x) without overflow.
double softplus(double x);

/// theta^T phi with a dimension check.
double margin(const Vector& theta, const Vector& phi);

/// pi(m)(1 - pi(m)) at m = theta^T phi. In [0, 1/4].
double coeff_a(const Vector& theta, const Vector& phi);

/// (pi(m) - y)^2 at m = theta^T phi. In [0, 1].
double coeff_b(const Vector& theta, const Sample& sample);

/// alpha a + beta b.
double coeff_c(double a, double b, const HybridWeights& w);

/// pi(theta^T phi) - y. In [-1, 1].
double residual(const Vector& theta, const Sample& sample);

/// log(1 + exp(m)) - m y, computed through softplus so it saturates to 0 instead of overflowing.
double loss(const Vector& theta, const Sample& sample);

/// Gradient of the per-sample loss: residual * phi.
Vector loss_gradient(const Vector& theta, const Sample& sample);

// Scalar forms used by the step functions once the margin is known.
namespace scalar {
double curvature(double m);                 // pi(m)(1 - pi(m))
double residual(double m, int y);           // pi(m) - y
double loss(double m, int y);               // softplus(m) - m y
}  // namespace scalar

}  // namespace hsn
