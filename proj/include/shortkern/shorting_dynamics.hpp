#pragma once

// Shorting iteration R_{n+1} = R_n^{1/2} (I - T_{n+1}) R_n^{1/2}, effect
// schedules, and the diagnostics that check a trajectory against the residual
// and block-reduction identities.

#include <algorithm>
#include <cmath>
#include <string>
#include <optional>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "shortkern/operator_core.hpp"
#include "shortkern/task_energy.hpp"
#include "shortkern/trajectory.hpp"

namespace shortkern {

/// T_n = scale * P_U for every n.
struct ConstantProjection {
  SubspaceSpec subspace;
  double scale;
};

/// T_{n+1} = spectral projector of the covariance onto eigenvalues >= tau_{n+1}.
/// The last threshold is reused once the list runs out.
struct CovarianceSpectral {
  PsdOperator covariance;
  std::vector<double> thresholds;
};

/// Rank-one projection onto the top eigenvector of R_n^{1/2} B R_n^{1/2}.
struct GreedyRankOne {
  TaskOperator task;
};

struct ExplicitList {
  std::vector<Effect> effects;
};

class EffectSchedule {
 public:
  using Kind = std::variant<ConstantProjection, CovarianceSpectral, GreedyRankOne, ExplicitList>;

  static EffectSchedule constant_projection(SubspaceSpec u, double scale) {
    if (!(scale > 0.0 && scale <= 1.0)) {
      throw Error(ErrorCode::ConfigError, "ConstantProjection scale must lie in (0, 1]");
    }
    return EffectSchedule(ConstantProjection{std::move(u), scale});
  }

  static EffectSchedule covariance_spectral(PsdOperator sigma, std::vector<double> thresholds) {
    if (thresholds.empty()) throw Error(ErrorCode::ConfigError, "no spectral thresholds");
    for (double tau : thresholds) {
      if (!(tau >= 0.0)) throw Error(ErrorCode::ConfigError, "spectral thresholds must be >= 0");
    }
    return EffectSchedule(CovarianceSpectral{std::move(sigma), std::move(thresholds)});
  }

  static EffectSchedule greedy(TaskOperator b) { return EffectSchedule(GreedyRankOne{std::move(b)}); }

  static EffectSchedule explicit_list(std::vector<Effect> effects) {
    if (effects.empty()) throw Error(ErrorCode::ConfigError, "empty effect list");
    for (const Effect& e : effects) {
      detail::require_same_dim(e.dim(), effects.front().dim(), "ExplicitList entry");
    }
    return EffectSchedule(ExplicitList{std::move(effects)});
  }

  const Kind& kind() const { return kind_; }

  template <typename T>
  const T* get_if() const { return std::get_if<T>(&kind_); }

  long dim() const {
    return std::visit(
        [](const auto& k) -> long {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, ConstantProjection>) return k.subspace.ambient_dim();
          else if constexpr (std::is_same_v<K, CovarianceSpectral>) return k.covariance.dim();
          else if constexpr (std::is_same_v<K, GreedyRankOne>) return k.task.dim();
          else return k.effects.front().dim();
        },
        kind_);
  }

 private:
  explicit EffectSchedule(Kind kind) : kind_(std::move(kind)) {}

  Kind kind_;
};

inline Effect spectral_projector(const PsdOperator& sigma, double threshold) {
  const EigenDecomposition e = eigen_decompose(sigma.matrix());
  Matrix p = Matrix::Zero(sigma.dim(), sigma.dim());
  for (long i = 0; i < e.eigenvalues.size(); ++i) {
    if (e.eigenvalues(i) >= threshold) p += e.eigenvectors.col(i) * e.eigenvectors.col(i).transpose();
  }
  return Effect::unchecked(p);
}

/// The effect T_{step+1} applied to R_step (steps count from zero).
inline Effect next_effect(const EffectSchedule& schedule, long step, const PsdOperator& current,
                          const Tolerances& tol = {}) {
  detail::require_same_dim(schedule.dim(), current.dim(), "next_effect");
  return std::visit(
      [&](const auto& k) -> Effect {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ConstantProjection>) {
          return Effect::unchecked(k.scale * orthogonal_projection(k.subspace).matrix());
        } else if constexpr (std::is_same_v<K, CovarianceSpectral>) {
          const auto idx = std::min<std::size_t>(static_cast<std::size_t>(step), k.thresholds.size() - 1);
          return spectral_projector(k.covariance, k.thresholds[idx]);
        } else if constexpr (std::is_same_v<K, GreedyRankOne>) {
          return greedy_effect(k.task, current, tol).effect;
        } else {
          if (step < 0 || step >= static_cast<long>(k.effects.size())) {
            throw Error(ErrorCode::ScheduleExhausted,
                        "explicit list has " + std::to_string(k.effects.size()) +
                            " effects, step " + std::to_string(step + 1) + " requested");
          }
          return k.effects[static_cast<std::size_t>(step)];
        }
      },
      schedule.kind());
}

/// R^{1/2} T R^{1/2}: the piece removed by one shorting step.
inline PsdOperator residual_increment(const PsdOperator& r, const Effect& t, const Tolerances& tol = {}) {
  detail::require_same_dim(r.dim(), t.dim(), "residual_increment");
  const PsdOperator root = psd_sqrt(r, tol);
#ifdef SHORTKERN_MUTATE_RESIDUAL_SIGN
  // Deliberate defect used to confirm the property suite detects it.
  return PsdOperator::unchecked(-(root.matrix() * t.matrix() * root.matrix()));
#else
  return PsdOperator::unchecked(root.matrix() * t.matrix() * root.matrix());
#endif
}

/// R^{1/2} (I - T) R^{1/2}.
inline PsdOperator shorting_step(const PsdOperator& r, const Effect& t, const Tolerances& tol = {}) {
  detail::require_same_dim(r.dim(), t.dim(), "shorting_step");
  const PsdOperator root = psd_sqrt(r, tol);
  const Matrix keep = Matrix::Identity(r.dim(), r.dim()) - t.matrix();
  return PsdOperator::unchecked(root.matrix() * keep * root.matrix());
}

inline Trajectory run_trajectory(const PsdOperator& r0, const EffectSchedule& schedule,
                                 const StoppingRule& stop, const Tolerances& tol = {}) {
  stop.validate();
  detail::require_same_dim(schedule.dim(), r0.dim(), "run_trajectory");
  const auto* greedy = schedule.get_if<GreedyRankOne>();
  const auto* list = schedule.get_if<ExplicitList>();

  Trajectory traj;
  traj.operators.push_back(r0);
  for (long n = 0; n < stop.max_steps; ++n) {
    if (list != nullptr && n >= static_cast<long>(list->effects.size())) break;
    const PsdOperator& current = traj.operators.back();

    std::optional<Effect> effect;
    if (greedy != nullptr) {
      GreedyChoice choice = greedy_effect(greedy->task, current, tol);
      // Nothing worth removing: further rank-one steps would chase round-off.
      if (choice.drop <= stop.frob_tol) {
        traj.converged = true;
        traj.final_delta = 0.0;
        break;
      }
      effect.emplace(std::move(choice.effect));
    } else {
      effect.emplace(next_effect(schedule, n, current, tol));
    }

    PsdOperator next = shorting_step(current, *effect, tol);
    const double delta = (current.matrix() - next.matrix()).norm();
    if (delta <= stop.frob_tol) {
      traj.converged = true;
      traj.final_delta = delta;
      break;
    }
    traj.increments.push_back(residual_increment(current, *effect, tol));
    traj.effects_used.push_back(std::move(*effect));
    traj.step_deltas.push_back(delta);
    traj.operators.push_back(std::move(next));
  }
  return traj;
}

/// ||(R_0 - R_N) - sum_m D^(m)||_F; zero in exact arithmetic.
inline double telescoping_error(const Trajectory& traj, long upto = -1) {
  if (traj.operators.empty()) throw Error(ErrorCode::IndexOutOfRange, "empty trajectory");
  const long n = upto < 0 ? traj.steps() : std::min(upto, traj.steps());
  Matrix gap = traj.operators.front().matrix() - traj.operators[static_cast<std::size_t>(n)].matrix();
  for (long m = 0; m < n; ++m) gap -= traj.increments[static_cast<std::size_t>(m)].matrix();
  return gap.norm();
}

/// Largest off-diagonal block ||P_{U^perp} R_n P_U||_F over the trajectory.
/// When R_0 = I the drift ||P_{U^perp}(R_n - R_0)P_{U^perp}||_F of the
/// complement block is folded into the result as well, since that block must
/// stay the identity.
///
/// Throws EffectNotSupportedInU unless every effect satisfies T = P_U T P_U.
inline double block_reduction_error(const Trajectory& traj, const SubspaceSpec& u,
                                    const Tolerances& tol = {}) {
  detail::require_same_dim(u.ambient_dim(), traj.dim(), "block_reduction_error");
  const Matrix p = orthogonal_projection(u).matrix();
  const Matrix q = complement_projection(u).matrix();
  for (long m = 0; m < traj.steps(); ++m) {
    const Matrix& t = traj.effects_used[static_cast<std::size_t>(m)].matrix();
    const double leak = (t - p * t * p).norm();
    if (leak > tol.recon * std::max(1.0, t.norm())) {
      throw Error(ErrorCode::EffectNotSupportedInU,
                  "effect " + std::to_string(m + 1) + " leaks " + std::to_string(leak) + " outside U");
    }
  }
  const Matrix& r0 = traj.initial().matrix();
  const bool starts_at_identity = (r0 - Matrix::Identity(r0.rows(), r0.cols())).norm() == 0.0;
  double worst = 0.0;
  for (const PsdOperator& r : traj.operators) {
    worst = std::max(worst, (q * r.matrix() * p).norm());
    if (starts_at_identity) worst = std::max(worst, (q * (r.matrix() - r0) * q).norm());
  }
  return worst;
}

/// ||R_N - P_{U^perp}||_F <= tol on a converged trajectory.
inline double exhaustion_error(const Trajectory& traj, const SubspaceSpec& u) {
  detail::require_same_dim(u.ambient_dim(), traj.dim(), "exhaustion_check");
  return (traj.last().matrix() - complement_projection(u).matrix()).norm();
}

inline bool exhaustion_check(const Trajectory& traj, const SubspaceSpec& u, double tol) {
  if (!traj.converged) throw Error(ErrorCode::NotConverged, "exhaustion needs a converged trajectory");
  return exhaustion_error(traj, u) <= tol;
}

}  // namespace shortkern
