#pragma once

// Dense symmetric-matrix kernel: rank-1 Sherman-Morrison-Woodbury maintenance of an
// inverse, rank-1 accumulation and a Cholesky-based direct inverse used as an oracle.

#include <Eigen/Dense>

#include "hsn/errors.hpp"

namespace hsn {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;

/// Relative tolerance under which a dense matrix is accepted as symmetric.
inline constexpr double kSymmetryTolerance = 1e-12;

/// Default cap on the condition estimate accepted by direct_inverse.
inline constexpr double kDefaultConditionCap = 1e12;

/**
 * Square, symmetric, finite matrix.
 *
 * Construction from a dense matrix validates shape, finiteness and symmetry
 * (relative to the largest entry) and then stores the exact symmetric part, so
 * every SymMatrix is bitwise symmetric.
 */
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix identity(Index dim);
  static SymMatrix zero(Index dim);

  Index dim() const noexcept { return m_.rows(); }
  double operator()(Index i, Index j) const { return m_(i, j); }
  const Eigen::MatrixXd& dense() const noexcept { return m_; }

  double trace() const { return m_.trace(); }
  double frobenius_norm() const { return m_.norm(); }

  Vector operator*(const Vector& v) const;
  SymMatrix operator+(const SymMatrix& other) const;
  SymMatrix operator-(const SymMatrix& other) const;
  SymMatrix scaled(double factor) const;

  bool operator==(const SymMatrix& other) const { return m_ == other.m_; }

 private:
  struct Unchecked {};
  SymMatrix(Eigen::MatrixXd m, Unchecked) : m_(std::move(m)) {}

  // (M + M^T) / 2 in place.
  void symmetrize();

  friend double smw_update_inplace(SymMatrix&, const Vector&, double, Vector&);
  friend void rank1_accumulate_inplace(SymMatrix&, const Vector&, double);
  friend SymMatrix direct_inverse(const SymMatrix&, double);

  Eigen::MatrixXd m_;
};

/// Result of a Sherman-Morrison-Woodbury step: the new inverse and g = c * phi^T S^{-1} phi.
struct SmwResult {
  SymMatrix matrix;
  double g = 0.0;
};

/**
 * Given S^{-1}, returns (S + c phi phi^T)^{-1} and g = c phi^T S^{-1} phi.
 *
 * Computed as S^{-1} - c (1 + g)^{-1} S^{-1} phi phi^T S^{-1} and symmetrized.
 * s_inv must be positive definite (not checked; it holds by construction for
 * optimizer states). Throws DimensionMismatch, NonFiniteInput, or
 * InvalidArgument when c < 0.
 */
SmwResult smw_update(const SymMatrix& s_inv, const Vector& phi, double c);

/// In-place variant used in the optimizer hot path. `work` is scratch space of size dim.
double smw_update_inplace(SymMatrix& s_inv, const Vector& phi, double c, Vector& work);

/// Inverse through Cholesky. Throws SingularMatrix when the factorization fails or the
/// reciprocal-condition estimate exceeds `condition_cap`.
SymMatrix direct_inverse(const SymMatrix& m, double condition_cap = kDefaultConditionCap);

/// Estimate of the 1-norm condition number from a Cholesky factorization;
/// +infinity when the matrix is not positive definite.
double condition_estimate(const SymMatrix& m);

/// m + w phi phi^T.
SymMatrix rank1_accumulate(const SymMatrix& m, const Vector& phi, double w);
void rank1_accumulate_inplace(SymMatrix& m, const Vector& phi, double w);

bool is_positive_definite(const SymMatrix& m);

/// Frobenius norm of a - b.
double frobenius_distance(const SymMatrix& a, const SymMatrix& b);

bool all_finite(const Vector& v);

}  // namespace hsn
