#pragma once

// Kernel ridge regression along a shorting trajectory.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "shortkern/kernel_engine.hpp"
#include "shortkern/operator_core.hpp"
#include "shortkern/trajectory.hpp"

namespace shortkern {

/// m label vectors in R^d, stored one per row.
class Labels {
 public:
  explicit Labels(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1) throw Error(ErrorCode::DimensionMismatch, "empty labels");
  }

  static Labels scalar(const Vector& y) { return Labels(Matrix(y)); }

  long points() const { return values_.rows(); }
  long output_dim() const { return values_.cols(); }
  const Matrix& values() const { return values_; }

  /// Stacked in the Gram layout, index i * d + k.
  Vector stacked() const {
    Vector out(values_.size());
    for (long i = 0; i < points(); ++i)
      for (long k = 0; k < output_dim(); ++k) out(i * output_dim() + k) = values_(i, k);
    return out;
  }

 private:
  Matrix values_;
};

struct RidgeConfig {
  double lambda;

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw Error(ErrorCode::ConfigError, "ridge lambda must be > 0");
    }
  }
};

namespace detail {

inline void require_matching(const GramOperator& g, const Labels& y) {
  require_same_dim(g.points(), y.points(), "Gram points vs labels");
  require_same_dim(g.output_dim(), y.output_dim(), "Gram output dim vs labels");
}

/// Cholesky of G + lambda I, solved for one or more right-hand sides.
class RidgeFactor {
 public:
  RidgeFactor(const GramOperator& g, double lambda)
      : shifted_(g.matrix() + lambda * Matrix::Identity(g.size(), g.size())), llt_(shifted_) {
    if (llt_.info() != Eigen::Success) {
      throw Error(ErrorCode::NumericalError, "G + lambda I is not positive definite");
    }
  }

  Vector solve(const Vector& rhs) const { return llt_.solve(rhs); }
  const Matrix& shifted() const { return shifted_; }

 private:
  Matrix shifted_;
  Eigen::LLT<Matrix> llt_;
};

inline Vector checked_solve(const RidgeFactor& f, const Vector& rhs, const Tolerances& tol) {
  Vector c = f.solve(rhs);
  const double residual = (f.shifted() * c - rhs).norm();
  if (residual > tol.solve * std::max(rhs.norm(), 1e-300)) {
    throw Error(ErrorCode::NumericalError, "ridge solve residual " + std::to_string(residual));
  }
  return c;
}

}  // namespace detail

/// Solves (G + lambda I) c = y.
inline Vector krr_fit(const GramOperator& g, const Labels& y, const RidgeConfig& cfg,
                      const Tolerances& tol = {}) {
  cfg.validate();
  detail::require_matching(g, y);
  return detail::checked_solve(detail::RidgeFactor(g, cfg.lambda), y.stacked(), tol);
}

/// f(t) = sum_i V(t)^T R V(s_i) c_i, stored through its feature-space
/// representative u = R V_X c so that f(t) = V(t)^T u.
class Predictor {
 public:
  Predictor(const FeatureMap& v, const PsdOperator& r, const Vector& coefficients)
      : output_dim_(v.output_dim()) {
    detail::require_same_dim(v.feature_dim(), r.dim(), "Predictor feature dim");
    detail::require_same_dim(coefficients.size(), v.size() * v.output_dim(), "Predictor coefficients");
    representative_ = r.matrix() * (v.stacked() * coefficients);
  }

  long feature_dim() const { return representative_.size(); }
  long output_dim() const { return output_dim_; }
  const Vector& representative() const { return representative_; }

 private:
  Vector representative_;
  long output_dim_;
};

inline Vector krr_predict(const Predictor& p, const Matrix& t_feature) {
  detail::require_same_dim(t_feature.rows(), p.feature_dim(), "krr_predict feature rows");
  detail::require_same_dim(t_feature.cols(), p.output_dim(), "krr_predict output dim");
  return t_feature.transpose() * p.representative();
}

struct KrrPath {
  std::vector<PsdOperator> operators;   // R_n, copied from the trajectory
  std::vector<GramOperator> grams;      // G_n
  std::vector<GramOperator> increments; // Delta G^(m)
  std::vector<Vector> coefficients;     // c_n
  std::vector<Vector> path_residuals;   // (G_{m+1} + lambda I)^{-1} Delta G^(m) c_m
  std::vector<double> path_errors;      // ||(c_{m+1} - c_m) - path_residuals[m]||
  std::vector<double> path_pairings;    // <c_m, path_residuals[m]>, diagnostic only

  long steps() const { return static_cast<long>(path_residuals.size()); }

  double max_path_error() const {
    double worst = 0.0;
    for (double e : path_errors) worst = std::max(worst, e);
    return worst;
  }
};

/// Ridge coefficients for every kernel on the trajectory. Consecutive
/// coefficients differ by c_{m+1} - c_m = (G_{m+1} + lambda I)^{-1} Delta G^(m) c_m
/// (resolvent identity with G_m - G_{m+1} = Delta G^(m)); path_errors measures
/// how far the independent solves are from that.
inline KrrPath krr_path(const Trajectory& traj, const FeatureMap& v, const Labels& y, const RidgeConfig& cfg,
                        const Tolerances& tol = {}) {
  cfg.validate();
  if (traj.operators.empty()) throw Error(ErrorCode::IndexOutOfRange, "empty trajectory");
  detail::require_same_dim(traj.dim(), v.feature_dim(), "krr_path");
  detail::require_same_dim(y.points(), v.size(), "krr_path labels");
  detail::require_same_dim(y.output_dim(), v.output_dim(), "krr_path labels");

  const Vector rhs = y.stacked();
  KrrPath path;
  path.operators = traj.operators;
  path.grams.push_back(gram_operator(v, traj.operators.front()));
  path.coefficients.push_back(
      detail::checked_solve(detail::RidgeFactor(path.grams.front(), cfg.lambda), rhs, tol));

  for (long m = 0; m < traj.steps(); ++m) {
    const auto i = static_cast<std::size_t>(m);
    GramOperator next = gram_operator(v, traj.operators[i + 1]);
    GramOperator delta = gram_increment(v, traj.operators[i], traj.effects_used[i], tol);
    const detail::RidgeFactor factor(next, cfg.lambda);
    const Vector& c_m = path.coefficients.back();
    Vector c_next = detail::checked_solve(factor, rhs, tol);
    Vector residual = factor.solve(delta.matrix() * c_m);

    path.path_errors.push_back(((c_next - c_m) - residual).norm());
    path.path_pairings.push_back(c_m.dot(residual));
    path.grams.push_back(std::move(next));
    path.increments.push_back(std::move(delta));
    path.coefficients.push_back(std::move(c_next));
    path.path_residuals.push_back(std::move(residual));
  }
  return path;
}

/// <u_n, g> for each step, where u_n = R_n V_X c_n represents f_n in feature
/// space. Reading g_feature as the K_0 representer a of g(t) = V(t)^T R_0 a,
/// this is the K_0 inner product <f_n, g>.
inline std::vector<double> nuisance_alignment(const KrrPath& path, const FeatureMap& v, const Vector& g_feature,
                                              const PsdOperator& r0) {
  detail::require_same_dim(g_feature.size(), v.feature_dim(), "nuisance_alignment");
  detail::require_same_dim(r0.dim(), v.feature_dim(), "nuisance_alignment R0");
  std::vector<double> out;
  out.reserve(path.coefficients.size());
  for (std::size_t n = 0; n < path.coefficients.size(); ++n) {
    const Predictor p(v, path.operators[n], path.coefficients[n]);
    out.push_back(p.representative().dot(g_feature));
  }
  return out;
}

}  // namespace shortkern
