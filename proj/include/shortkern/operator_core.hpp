#pragma once

// Dense symmetric linear algebra: positive operators, effects, subspaces and
// the spectral helpers (square root, pseudo-inverse, Loewner comparison) the
// dynamics are built on.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "shortkern/error.hpp"
#include "shortkern/tolerances.hpp"

namespace shortkern {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Eigenvalues sorted descending with matching orthonormal eigenvector columns.
/// Equal eigenvalues keep the solver's column order, so ties resolve to the
/// lowest column index.
struct EigenDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;
};

inline EigenDecomposition eigen_decompose(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(a));
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NumericalError, "symmetric eigensolver did not converge");
  }
  const long n = a.rows();
  std::vector<long> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0L);
  const Vector& values = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](long i, long j) { return values(i) > values(j); });
  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (long k = 0; k < n; ++k) {
    out.eigenvalues(k) = values(order[static_cast<std::size_t>(k)]);
    out.eigenvectors.col(k) = solver.eigenvectors().col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

inline double max_eigenvalue(const Matrix& a) { return eigen_decompose(a).eigenvalues(0); }

inline double min_eigenvalue(const Matrix& a) {
  const EigenDecomposition e = eigen_decompose(a);
  return e.eigenvalues(e.eigenvalues.size() - 1);
}

/// Symmetric positive semidefinite D x D matrix.
class PsdOperator {
 public:
  /// Validates symmetry and positivity; throws NotPsd otherwise.
  explicit PsdOperator(Matrix entries, const Tolerances& tol = {}) : entries_(std::move(entries)) {
    if (entries_.rows() < 1 || entries_.rows() != entries_.cols()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "operator must be square with positive dimension, got " +
                      std::to_string(entries_.rows()) + "x" + std::to_string(entries_.cols()));
    }
    if (!entries_.allFinite()) throw Error(ErrorCode::NotPsd, "non-finite entries");
    const double scale = 1.0 + entries_.cwiseAbs().maxCoeff();
    const double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
    if (asym > tol.sym * scale) {
      throw Error(ErrorCode::NotPsd, "asymmetry " + std::to_string(asym));
    }
    entries_ = symmetrize(entries_);
    const EigenDecomposition e = eigen_decompose(entries_);
    const double lmax = e.eigenvalues(0);
    const double lmin = e.eigenvalues(dim() - 1);
    if (lmin < -tol.psd * (1.0 + std::max(lmax, 0.0))) {
      throw Error(ErrorCode::NotPsd, "smallest eigenvalue " + std::to_string(lmin));
    }
  }

  /// Wraps a matrix that is PSD by construction (products of the form
  /// X^T A X). Only re-symmetrizes.
  static PsdOperator unchecked(const Matrix& entries) {
    return PsdOperator(Unchecked{}, symmetrize(entries));
  }

  static PsdOperator identity(long dim) { return unchecked(Matrix::Identity(dim, dim)); }
  static PsdOperator zero(long dim) { return unchecked(Matrix::Zero(dim, dim)); }
  static PsdOperator diagonal(const Vector& diag, const Tolerances& tol = {}) {
    return PsdOperator(Matrix(diag.asDiagonal()), tol);
  }

  long dim() const { return entries_.rows(); }
  const Matrix& matrix() const { return entries_; }

 private:
  struct Unchecked {};
  PsdOperator(Unchecked, Matrix entries) : entries_(std::move(entries)) {}

  Matrix entries_;
};

/// Positive operator dominated by the identity, 0 <= T <= I.
class Effect {
 public:
  explicit Effect(PsdOperator op, const Tolerances& tol = {}) : op_(std::move(op)) {
    const double lmax = max_eigenvalue(op_.matrix());
    if (lmax > 1.0 + tol.psd) {
      throw Error(ErrorCode::NotContraction, "largest eigenvalue " + std::to_string(lmax));
    }
  }

  static Effect zero(long dim) { return Effect(Unchecked{}, PsdOperator::zero(dim)); }
  static Effect unchecked(const Matrix& entries) {
    return Effect(Unchecked{}, PsdOperator::unchecked(entries));
  }

  long dim() const { return op_.dim(); }
  const PsdOperator& op() const { return op_; }
  const Matrix& matrix() const { return op_.matrix(); }

 private:
  struct Unchecked {};
  Effect(Unchecked, PsdOperator op) : op_(std::move(op)) {}

  PsdOperator op_;
};

/// Checks 0 <= op <= I. NotPsd surfaces from the PsdOperator constructor when
/// the raw matrix is given instead.
inline Effect validate_effect(const PsdOperator& op, const Tolerances& tol = {}) {
  return Effect(op, tol);
}

inline Effect validate_effect(const Matrix& raw, const Tolerances& tol = {}) {
  return Effect(PsdOperator(raw, tol), tol);
}

/// Subspace of R^D with an orthonormal basis stored column-wise.
class SubspaceSpec {
 public:
  /// Orthonormalizes `raw` by modified Gram-Schmidt. Throws DegenerateBasis if
  /// any vector is (numerically) in the span of the previous ones.
  SubspaceSpec(long ambient_dim, const std::vector<Vector>& raw, const Tolerances& tol = {})
      : ambient_dim_(ambient_dim), basis_(ambient_dim, 0) {
    if (ambient_dim < 1) throw Error(ErrorCode::DimensionMismatch, "ambient dimension must be >= 1");
    for (const Vector& v : raw) {
      if (!append(v, tol)) {
        throw Error(ErrorCode::DegenerateBasis,
                    "basis vector " + std::to_string(&v - raw.data()) + " is linearly dependent");
      }
    }
  }

  /// Like the constructor but drops dependent vectors instead of throwing.
  static SubspaceSpec span_of(long ambient_dim, const std::vector<Vector>& raw,
                              const Tolerances& tol = {}) {
    SubspaceSpec out(ambient_dim, {}, tol);
    for (const Vector& v : raw) out.append(v, tol);
    return out;
  }

  static SubspaceSpec trivial(long ambient_dim) { return SubspaceSpec(ambient_dim, {}); }

  /// Orthonormal basis of the orthogonal complement.
  SubspaceSpec complement(const Tolerances& tol = {}) const {
    SubspaceSpec out(ambient_dim_, {}, tol);
    // I - P has eigenvalue 1 exactly on the complement and 0 on this subspace.
    const Matrix residual =
        Matrix::Identity(ambient_dim_, ambient_dim_) - basis_ * basis_.transpose();
    const EigenDecomposition e = eigen_decompose(residual);
    for (long i = 0; i < ambient_dim_ && e.eigenvalues(i) > 0.5; ++i) {
      out.append(e.eigenvectors.col(i), tol);
    }
    if (out.rank() + rank() != ambient_dim_) {
      throw Error(ErrorCode::NumericalError, "complement construction lost rank");
    }
    return out;
  }

  long ambient_dim() const { return ambient_dim_; }
  long rank() const { return basis_.cols(); }
  const Matrix& basis() const { return basis_; }
  Vector basis_vector(long k) const { return basis_.col(k); }

 private:
  bool append(const Vector& v, const Tolerances& tol) {
    detail::require_same_dim(v.size(), ambient_dim_, "SubspaceSpec basis vector");
    const double norm0 = v.norm();
    if (norm0 == 0.0 || !std::isfinite(norm0)) return false;
    Vector w = v / norm0;
    // Two MGS sweeps keep orthogonality at machine precision.
    for (int sweep = 0; sweep < 2; ++sweep) {
      for (long k = 0; k < basis_.cols(); ++k) w -= basis_.col(k).dot(w) * basis_.col(k);
    }
    const double residual = w.norm();
    if (residual <= tol.orth) return false;
    basis_.conservativeResize(Eigen::NoChange, basis_.cols() + 1);
    basis_.col(basis_.cols() - 1) = w / residual;
    return true;
  }

  long ambient_dim_;
  Matrix basis_;
};

inline PsdOperator orthogonal_projection(const SubspaceSpec& u) {
  return PsdOperator::unchecked(u.basis() * u.basis().transpose());
}

inline PsdOperator complement_projection(const SubspaceSpec& u) {
  const long d = u.ambient_dim();
  return PsdOperator::unchecked(Matrix::Identity(d, d) - u.basis() * u.basis().transpose());
}

/// Symmetric square root. Eigenvalues in [-psd_tol (1 + lambda_max), 0) are
/// clipped to zero; anything more negative throws NotPsd.
inline PsdOperator psd_sqrt(const PsdOperator& a, const Tolerances& tol = {}) {
  const EigenDecomposition e = eigen_decompose(a.matrix());
  const double lmax = std::max(e.eigenvalues(0), 0.0);
  Vector roots(e.eigenvalues.size());
  for (long i = 0; i < roots.size(); ++i) {
    const double lambda = e.eigenvalues(i);
    if (lambda < -tol.psd * (1.0 + lmax)) {
      throw Error(ErrorCode::NotPsd, "eigenvalue " + std::to_string(lambda) + " in psd_sqrt");
    }
    roots(i) = std::sqrt(std::max(lambda, 0.0));
  }
  return PsdOperator::unchecked(e.eigenvectors * roots.asDiagonal() * e.eigenvectors.transpose());
}

/// A <= B in the Loewner order, up to tol (1 + ||B||_2).
inline bool loewner_leq(const PsdOperator& a, const PsdOperator& b, double tol) {
  detail::require_same_dim(a.dim(), b.dim(), "loewner_leq");
  const EigenDecomposition eb = eigen_decompose(b.matrix());
  const double norm_b = std::max(std::abs(eb.eigenvalues(0)),
                                 std::abs(eb.eigenvalues(eb.eigenvalues.size() - 1)));
  return min_eigenvalue(b.matrix() - a.matrix()) >= -tol * (1.0 + norm_b);
}

/// Moore-Penrose pseudo-inverse with eigenvalues <= cutoff_rel * lambda_max
/// treated as zero.
inline PsdOperator pseudo_inverse(const PsdOperator& a, double cutoff_rel = Tolerances{}.cutoff_rel) {
  const EigenDecomposition e = eigen_decompose(a.matrix());
  const double lmax = e.eigenvalues(0);
  Vector inv = Vector::Zero(e.eigenvalues.size());
  if (lmax > 0.0) {
    for (long i = 0; i < inv.size(); ++i) {
      if (e.eigenvalues(i) > cutoff_rel * lmax) inv(i) = 1.0 / e.eigenvalues(i);
    }
  }
  return PsdOperator::unchecked(e.eigenvectors * inv.asDiagonal() * e.eigenvectors.transpose());
}

/// Flips v so that its first entry with magnitude above sign_tol is positive.
inline void normalize_sign(Vector& v, double sign_tol) {
  for (long i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > sign_tol) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

struct EigenPair {
  double value;
  Vector vector;
};

inline EigenPair top_eigenpair(const PsdOperator& a, const Tolerances& tol = {}) {
  const EigenDecomposition e = eigen_decompose(a.matrix());
  Vector w = e.eigenvectors.col(0);
  normalize_sign(w, tol.sign);
  return {e.eigenvalues(0), std::move(w)};
}

}  // namespace shortkern
