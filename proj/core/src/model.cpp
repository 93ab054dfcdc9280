#include "hsn/model.hpp"

#include <cmath>
#include <string>

namespace hsn {

HybridWeights::HybridWeights(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  if (!std::isfinite(alpha) || !std::isfinite(beta)) {
    throw InvalidArgument("HybridWeights: alpha and beta must be finite");
  }
  if (alpha < 0.0) throw InvalidArgument("HybridWeights: alpha must be >= 0");
  if (!(beta > 0.0)) throw InvalidArgument("HybridWeights: beta must be > 0");
}

void validate_sample(const Sample& s, std::optional<double> norm_bound) {
  if (s.y != 0 && s.y != 1) {
    throw InvalidArgument("Sample: label must be 0 or 1, got " + std::to_string(s.y));
  }
  if (s.phi.size() == 0) throw InvalidArgument("Sample: empty feature vector");
  if (!s.phi.allFinite()) throw NonFiniteInput("Sample");
  if (norm_bound && s.phi.norm() > *norm_bound) {
    throw InvalidArgument("Sample: ||phi|| exceeds the configured bound " +
                          std::to_string(*norm_bound));
  }
}

double sigmoid(double x) {
  if (!std::isfinite(x)) throw NonFiniteInput("sigmoid");
  if (x < 0.0) {
    const double e = std::exp(x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(-x));
}

double softplus(double x) {
  if (!std::isfinite(x)) throw NonFiniteInput("softplus");
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double margin(const Vector& theta, const Vector& phi) {
  if (theta.size() != phi.size()) throw DimensionMismatch("margin", theta.size(), phi.size());
  return theta.dot(phi);
}

namespace scalar {

double curvature(double m) { return sigmoid(m) * sigmoid(-m); }

double residual(double m, int y) {
  // 1 - pi(m) == pi(-m); avoids cancellation for large positive margins.
  return y == 1 ? -sigmoid(-m) : sigmoid(m);
}

double loss(double m, int y) {
  // softplus(m) - m == softplus(-m)
  return y == 1 ? softplus(-m) : softplus(m);
}

}  // namespace scalar

namespace {

void check_label(const char* where, int y) {
  if (y != 0 && y != 1) {
    throw InvalidArgument(std::string(where) + ": label must be 0 or 1, got " + std::to_string(y));
  }
}

}  // namespace

double coeff_a(const Vector& theta, const Vector& phi) {
  return scalar::curvature(margin(theta, phi));
}

double coeff_b(const Vector& theta, const Sample& sample) {
  check_label("coeff_b", sample.y);
  const double r = scalar::residual(margin(theta, sample.phi), sample.y);
  return r * r;
}

double coeff_c(double a, double b, const HybridWeights& w) {
  if (!(a >= 0.0 && a <= 0.25)) throw InvalidArgument("coeff_c: a must lie in [0, 1/4]");
  if (!(b >= 0.0 && b <= 1.0)) throw InvalidArgument("coeff_c: b must lie in [0, 1]");
  return w.alpha() * a + w.beta() * b;
}

double residual(const Vector& theta, const Sample& sample) {
  check_label("residual", sample.y);
  return scalar::residual(margin(theta, sample.phi), sample.y);
}

double loss(const Vector& theta, const Sample& sample) {
  check_label("loss", sample.y);
  return scalar::loss(margin(theta, sample.phi), sample.y);
}

Vector loss_gradient(const Vector& theta, const Sample& sample) {
  return residual(theta, sample) * sample.phi;
}

}  // namespace hsn
