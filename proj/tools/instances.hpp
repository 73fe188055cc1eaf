#pragma once

// Seeded random problem instances for the property suites.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/QR>

#include "shortkern/shortkern.hpp"

namespace shortkern::instances {

inline Matrix random_orthogonal(SplitMix64& rng, long n) {
  Eigen::HouseholderQR<Matrix> qr(rng.gaussian_matrix(n, n));
  return qr.householderQ();
}

/// Q diag(lambda) Q^T, lambda uniform in [lo, hi].
inline Matrix random_spectrum_matrix(SplitMix64& rng, long n, double lo, double hi) {
  const Matrix q = random_orthogonal(rng, n);
  Vector lambda(n);
  for (long i = 0; i < n; ++i) lambda(i) = rng.uniform(lo, hi);
  return symmetrize(q * lambda.asDiagonal() * q.transpose());
}

inline Matrix random_spd(SplitMix64& rng, long n) { return random_spectrum_matrix(rng, n, 0.1, 2.0); }
inline Matrix random_contraction(SplitMix64& rng, long n) { return random_spectrum_matrix(rng, n, 0.0, 1.0); }

inline Matrix random_low_rank(SplitMix64& rng, long n, long r) {
  const Matrix b = rng.gaussian_matrix(n, r);
  return b * b.transpose();
}

inline long uniform_index(SplitMix64& rng, long lo, long hi) {
  return lo + static_cast<long>(rng.next() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline SubspaceSpec random_subspace(SplitMix64& rng, long n, long rank) {
  std::vector<Vector> raw;
  for (long i = 0; i < rank; ++i) raw.push_back(rng.gaussian_vector(n));
  return SubspaceSpec(n, raw);
}

/// Gaussian feature matrices scaled by 1/sqrt(D).
inline FeatureMap random_features(SplitMix64& rng, long feature_dim, long output_dim, long points) {
  std::vector<Matrix> mats;
  const double scale = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  for (long i = 0; i < points; ++i) mats.push_back(scale * rng.gaussian_matrix(feature_dim, output_dim));
  return FeatureMap(std::move(mats));
}

/// Random vector in the span of the eigenvectors of r whose eigenvalues exceed
/// rel_floor * lambda_max(r). Empty when r is below abs_floor (numerically zero).
inline std::optional<Vector> sample_in_range(SplitMix64& rng, const PsdOperator& r, double rel_floor = 1e-8,
                                             double abs_floor = 1e-12) {
  const EigenDecomposition e = eigen_decompose(r.matrix());
  const double top = e.eigenvalues(0);
  if (top <= abs_floor) return std::nullopt;
  Vector u = Vector::Zero(r.dim());
  for (long i = 0; i < r.dim() && e.eigenvalues(i) > rel_floor * top; ++i)
    u += rng.gaussian() * e.eigenvectors.col(i);
  return u;
}

enum class ScheduleKind { ConstantProjection, CovarianceSpectral, Greedy, ExplicitList };

/// One of the four schedule families, chosen by `kind`, with random data.
inline EffectSchedule random_schedule(SplitMix64& rng, long n, ScheduleKind kind, long list_length = 10) {
  switch (kind) {
    case ScheduleKind::ConstantProjection:
      return EffectSchedule::constant_projection(random_subspace(rng, n, uniform_index(rng, 1, n)),
                                                 rng.uniform(0.1, 1.0));
    case ScheduleKind::CovarianceSpectral: {
      const PsdOperator sigma(random_low_rank(rng, n, uniform_index(rng, 1, n)) / static_cast<double>(n));
      const double top = max_eigenvalue(sigma.matrix());
      return EffectSchedule::covariance_spectral(sigma, {0.9 * top, 0.5 * top, 0.2 * top});
    }
    case ScheduleKind::Greedy:
      return EffectSchedule::greedy(TaskOperator{PsdOperator(random_spd(rng, n))});
    case ScheduleKind::ExplicitList: {
      std::vector<Effect> effects;
      for (long i = 0; i < list_length; ++i) effects.emplace_back(PsdOperator(random_contraction(rng, n)));
      return EffectSchedule::explicit_list(std::move(effects));
    }
  }
  throw Error(ErrorCode::ConfigError, "unknown schedule kind");
}

}  // namespace shortkern::instances
