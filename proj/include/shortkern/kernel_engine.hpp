#pragma once

// Kernels induced by a positive operator through an explicit feature map,
// K_R(s, t) = V(s)^T R V(t), evaluated on a finite sample.

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "shortkern/operator_core.hpp"
#include "shortkern/random.hpp"
#include "shortkern/shorting_dynamics.hpp"

namespace shortkern {

/// Sample points s_1..s_m, each carrying a D x d feature matrix V(s_i).
class FeatureMap {
 public:
  explicit FeatureMap(std::vector<Matrix> matrices) : matrices_(std::move(matrices)) {
    if (matrices_.empty()) throw Error(ErrorCode::DimensionMismatch, "feature map needs m >= 1 points");
    const long rows = matrices_.front().rows();
    const long cols = matrices_.front().cols();
    if (rows < 1 || cols < 1) throw Error(ErrorCode::DimensionMismatch, "empty feature matrix");
    stacked_.resize(rows, cols * size());
    for (long i = 0; i < size(); ++i) {
      const Matrix& v = matrices_[static_cast<std::size_t>(i)];
      if (v.rows() != rows || v.cols() != cols) {
        throw Error(ErrorCode::DimensionMismatch,
                    "feature matrix " + std::to_string(i) + " has shape " + std::to_string(v.rows()) +
                        "x" + std::to_string(v.cols()));
      }
      stacked_.middleCols(i * cols, cols) = v;
    }
  }

  /// d = 1 convenience: one feature vector per point.
  static FeatureMap from_vectors(const std::vector<Vector>& vectors) {
    std::vector<Matrix> mats;
    mats.reserve(vectors.size());
    for (const Vector& v : vectors) mats.emplace_back(v);
    return FeatureMap(std::move(mats));
  }

  long feature_dim() const { return stacked_.rows(); }
  long output_dim() const { return matrices_.front().cols(); }
  long size() const { return static_cast<long>(matrices_.size()); }

  const Matrix& at(long i) const {
    if (i < 0 || i >= size()) {
      throw Error(ErrorCode::IndexOutOfRange, "point " + std::to_string(i) + " of " + std::to_string(size()));
    }
    return matrices_[static_cast<std::size_t>(i)];
  }

  /// V_X = [V(s_1) ... V(s_m)], D x (m d).
  const Matrix& stacked() const { return stacked_; }

 private:
  std::vector<Matrix> matrices_;
  Matrix stacked_;
};

/// (m d) x (m d) block matrix; row index i * d + k addresses output
/// coordinate k of point i.
class GramOperator {
 public:
  GramOperator(Matrix entries, long points, long output_dim)
      : entries_(std::move(entries)), points_(points), output_dim_(output_dim) {
    if (entries_.rows() != points * output_dim || entries_.cols() != entries_.rows()) {
      throw Error(ErrorCode::DimensionMismatch, "Gram shape does not match m * d");
    }
  }

  long points() const { return points_; }
  long output_dim() const { return output_dim_; }
  long size() const { return entries_.rows(); }
  const Matrix& matrix() const { return entries_; }

  Matrix block(long i, long j) const {
    return entries_.block(i * output_dim_, j * output_dim_, output_dim_, output_dim_);
  }

  bool is_psd(const Tolerances& tol = {}) const {
    const double scale = 1.0 + entries_.cwiseAbs().maxCoeff();
    if ((entries_ - entries_.transpose()).cwiseAbs().maxCoeff() > tol.sym * scale) return false;
    const EigenDecomposition e = eigen_decompose(entries_);
    return e.eigenvalues(size() - 1) >= -tol.psd * (1.0 + std::max(e.eigenvalues(0), 0.0));
  }

 private:
  Matrix entries_;
  long points_;
  long output_dim_;
};

/// Q with 0 <= Q <= I, standing for the kernel V(s)^T Q V(t).
class ContractionWitness {
 public:
  explicit ContractionWitness(const PsdOperator& q, const Tolerances& tol = {}) : q_(q, tol) {}

  long dim() const { return q_.dim(); }
  const Matrix& matrix() const { return q_.matrix(); }

 private:
  Effect q_;
};

inline Matrix kernel_eval(const FeatureMap& v, const PsdOperator& r, long i, long j) {
  detail::require_same_dim(v.feature_dim(), r.dim(), "kernel_eval");
  return v.at(i).transpose() * r.matrix() * v.at(j);
}

inline GramOperator gram_operator(const FeatureMap& v, const PsdOperator& r) {
  detail::require_same_dim(v.feature_dim(), r.dim(), "gram_operator");
  const Matrix& vx = v.stacked();
  return GramOperator(symmetrize(vx.transpose() * r.matrix() * vx), v.size(), v.output_dim());
}

/// Gram of the removed kernel V^T R_m^{1/2} T R_m^{1/2} V.
inline GramOperator gram_increment(const FeatureMap& v, const PsdOperator& r, const Effect& t,
                                   const Tolerances& tol = {}) {
  return gram_operator(v, residual_increment(r, t, tol));
}

/// (1/m) sum_i V(s_i) V(s_i)^T.
inline PsdOperator empirical_covariance(const FeatureMap& v) {
  const Matrix& vx = v.stacked();
  return PsdOperator::unchecked(vx * vx.transpose() / static_cast<double>(v.size()));
}

/// <u, R^+ u>, the squared norm of t -> V(t)^T u in the kernel of R. Returns
/// +infinity when u has a component outside the numerical range of R.
inline double rkhs_norm_sq(const PsdOperator& r, const Vector& u, const Tolerances& tol = {}) {
  detail::require_same_dim(r.dim(), u.size(), "rkhs_norm_sq");
  const EigenDecomposition e = eigen_decompose(r.matrix());
  const double lmax = e.eigenvalues(0);
  const Vector coords = e.eigenvectors.transpose() * u;
  double outside = 0.0;
  double value = 0.0;
  for (long i = 0; i < coords.size(); ++i) {
    const double lambda = e.eigenvalues(i);
    if (lmax > 0.0 && lambda > tol.cutoff_rel * lmax) {
      value += coords(i) * coords(i) / lambda;
    } else {
      outside += coords(i) * coords(i);
    }
  }
  if (std::sqrt(outside) > tol.range * u.norm()) return std::numeric_limits<double>::infinity();
  return value;
}

/// Samples <h, V(s_i)^T (R_ref - Q) V(s_i) h> over seeded unit h for every
/// diagonal pair (i, i) and reports whether all are >= -psd_tol. Off-diagonal
/// pairs are accepted but not tested.
inline bool dominance_check(const FeatureMap& v, const ContractionWitness& q, const PsdOperator& r_ref,
                            const std::vector<std::pair<long, long>>& pairs, const Tolerances& tol = {},
                            std::uint64_t seed = 0x5eed, int samples = 100) {
  detail::require_same_dim(q.dim(), r_ref.dim(), "dominance_check");
  detail::require_same_dim(v.feature_dim(), r_ref.dim(), "dominance_check");
  const Matrix gap = r_ref.matrix() - q.matrix();
  SplitMix64 rng(seed);
  for (const auto& [i, j] : pairs) {
    if (i != j) continue;
    const Matrix local = v.at(i).transpose() * gap * v.at(i);
    for (int s = 0; s < samples; ++s) {
      const Vector h = rng.unit_vector(v.output_dim());
      if (h.dot(local * h) < -tol.psd) return false;
    }
  }
  return true;
}

}  // namespace shortkern
