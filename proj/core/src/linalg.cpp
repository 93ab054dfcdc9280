#include "hsn/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace hsn {

namespace {

void require_same_dim(const char* where, Index expected, Index actual) {
  if (expected != actual) throw DimensionMismatch(where, expected, actual);
}

}  // namespace

bool all_finite(const Vector& v) { return v.allFinite(); }

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) : m_(m) {
  if (m_.rows() != m_.cols()) throw DimensionMismatch("SymMatrix", m_.rows(), m_.cols());
  if (m_.rows() == 0) throw InvalidArgument("SymMatrix: dimension must be positive");
  if (!m_.allFinite()) throw NonFiniteInput("SymMatrix");
  const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
  const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance * scale) {
    throw InvalidArgument("SymMatrix: input is not symmetric (max asymmetry " +
                          std::to_string(asym) + ")");
  }
  symmetrize();
}

SymMatrix SymMatrix::identity(Index dim) {
  if (dim <= 0) throw InvalidArgument("SymMatrix::identity: dimension must be positive");
  return SymMatrix(Eigen::MatrixXd::Identity(dim, dim), Unchecked{});
}

SymMatrix SymMatrix::zero(Index dim) {
  if (dim <= 0) throw InvalidArgument("SymMatrix::zero: dimension must be positive");
  return SymMatrix(Eigen::MatrixXd::Zero(dim, dim), Unchecked{});
}

void SymMatrix::symmetrize() {
  const Index d = m_.rows();
  for (Index j = 0; j < d; ++j) {
    for (Index i = j + 1; i < d; ++i) {
      const double avg = 0.5 * (m_(i, j) + m_(j, i));
      m_(i, j) = avg;
      m_(j, i) = avg;
    }
  }
}

Vector SymMatrix::operator*(const Vector& v) const {
  require_same_dim("SymMatrix::operator*", dim(), v.size());
  return m_ * v;
}

SymMatrix SymMatrix::operator+(const SymMatrix& other) const {
  require_same_dim("SymMatrix::operator+", dim(), other.dim());
  return SymMatrix(m_ + other.m_, Unchecked{});
}

SymMatrix SymMatrix::operator-(const SymMatrix& other) const {
  require_same_dim("SymMatrix::operator-", dim(), other.dim());
  return SymMatrix(m_ - other.m_, Unchecked{});
}

SymMatrix SymMatrix::scaled(double factor) const {
  if (!std::isfinite(factor)) throw NonFiniteInput("SymMatrix::scaled");
  return SymMatrix(m_ * factor, Unchecked{});
}

double smw_update_inplace(SymMatrix& s_inv, const Vector& phi, double c, Vector& work) {
  require_same_dim("smw_update", s_inv.dim(), phi.size());
  if (!std::isfinite(c) || !phi.allFinite()) throw NonFiniteInput("smw_update");
  if (c < 0.0) throw InvalidArgument("smw_update: weight c must be nonnegative");

  // work = S^{-1} phi, g = c phi^T S^{-1} phi
  work.noalias() = s_inv.m_ * phi;
  const double g = c * phi.dot(work);
  if (c == 0.0 || g == 0.0) return 0.0;

  const double k = c / (1.0 + g);
  const Index d = s_inv.dim();
  Eigen::MatrixXd& m = s_inv.m_;
  for (Index j = 0; j < d; ++j) {
    const double kw = k * work(j);
    for (Index i = 0; i < d; ++i) m(i, j) -= kw * work(i);
  }
  s_inv.symmetrize();
  return g;
}

SmwResult smw_update(const SymMatrix& s_inv, const Vector& phi, double c) {
  SmwResult out{s_inv, 0.0};
  Vector work(s_inv.dim());
  out.g = smw_update_inplace(out.matrix, phi, c, work);
  return out;
}

double condition_estimate(const SymMatrix& m) {
  const Eigen::LLT<Eigen::MatrixXd> llt(m.dense());
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const double rcond = llt.rcond();
  return rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
}

SymMatrix direct_inverse(const SymMatrix& m, double condition_cap) {
  const Eigen::LLT<Eigen::MatrixXd> llt(m.dense());
  if (llt.info() != Eigen::Success) {
    throw SingularMatrix("direct_inverse", std::numeric_limits<double>::infinity());
  }
  const double rcond = llt.rcond();
  const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(cond <= condition_cap)) throw SingularMatrix("direct_inverse", cond);

  SymMatrix out(llt.solve(Eigen::MatrixXd::Identity(m.dim(), m.dim())), SymMatrix::Unchecked{});
  out.symmetrize();
  return out;
}

void rank1_accumulate_inplace(SymMatrix& m, const Vector& phi, double w) {
  require_same_dim("rank1_accumulate", m.dim(), phi.size());
  if (!std::isfinite(w) || !phi.allFinite()) throw NonFiniteInput("rank1_accumulate");
  if (w == 0.0) return;
  const Index d = m.dim();
  for (Index j = 0; j < d; ++j) {
    const double wj = w * phi(j);
    for (Index i = 0; i < d; ++i) m.m_(i, j) += wj * phi(i);
  }
  m.symmetrize();
}

SymMatrix rank1_accumulate(const SymMatrix& m, const Vector& phi, double w) {
  SymMatrix out = m;
  rank1_accumulate_inplace(out, phi, w);
  return out;
}

bool is_positive_definite(const SymMatrix& m) {
  const Eigen::LLT<Eigen::MatrixXd> llt(m.dense());
  return llt.info() == Eigen::Success;
}

double frobenius_distance(const SymMatrix& a, const SymMatrix& b) {
  require_same_dim("frobenius_distance", a.dim(), b.dim());
  return (a.dense() - b.dense()).norm();
}

}  // namespace hsn
