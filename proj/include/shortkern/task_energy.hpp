#pragma once

// Task energy E_n = <B, R_n> and greedy rank-one effect selection.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "shortkern/operator_core.hpp"
#include "shortkern/trajectory.hpp"

namespace shortkern {

struct TaskOperator {
  PsdOperator op;

  long dim() const { return op.dim(); }
  const Matrix& matrix() const { return op.matrix(); }
};

/// tr(B R). Equal to tr(R^{1/2} B R^{1/2}) by cyclicity, without the square root.
inline double task_energy(const TaskOperator& b, const PsdOperator& r) {
  detail::require_same_dim(b.dim(), r.dim(), "task_energy");
  return b.matrix().cwiseProduct(r.matrix()).sum();
}

/// B_R = R^{1/2} B R^{1/2}.
inline PsdOperator conjugate_task(const TaskOperator& b, const PsdOperator& r,
                                  const Tolerances& tol = {}) {
  detail::require_same_dim(b.dim(), r.dim(), "conjugate_task");
  const PsdOperator root = psd_sqrt(r, tol);
  return PsdOperator::unchecked(root.matrix() * b.matrix() * root.matrix());
}

/// Energy removed by shorting R along T: <R^{1/2} B R^{1/2}, T>_HS.
inline double energy_drop(const TaskOperator& b, const PsdOperator& r, const Effect& t,
                          const Tolerances& tol = {}) {
  detail::require_same_dim(r.dim(), t.dim(), "energy_drop");
  return conjugate_task(b, r, tol).matrix().cwiseProduct(t.matrix()).sum();
}

struct GreedyChoice {
  Effect effect;
  Vector direction;
  double drop;
};

/// Rank-one effect w w^T along the top eigenvector of R^{1/2} B R^{1/2}; its
/// drop is the top eigenvalue, and no other rank-one effect removes more.
inline GreedyChoice greedy_effect(const TaskOperator& b, const PsdOperator& r,
                                  const Tolerances& tol = {}) {
  const EigenPair top = top_eigenpair(conjugate_task(b, r, tol), tol);
  return {Effect::unchecked(top.vector * top.vector.transpose()), top.vector, top.value};
}

struct EnergyLedger {
  std::vector<double> energies;
  std::vector<double> drops;     // energies[n] - energies[n+1]
  std::vector<double> hs_drops;  // <R_n^{1/2} B R_n^{1/2}, T_{n+1}>

  double max_drop_discrepancy() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < drops.size(); ++i)
      worst = std::max(worst, std::abs(drops[i] - hs_drops[i]));
    return worst;
  }

  bool nonincreasing(double rel_tol = 1e-10) const {
    if (energies.empty()) return true;
    const double slack = rel_tol * (1.0 + std::abs(energies.front()));
    for (std::size_t i = 0; i + 1 < energies.size(); ++i)
      if (energies[i + 1] > energies[i] + slack) return false;
    return true;
  }
};

inline EnergyLedger energy_ledger(const Trajectory& traj, const TaskOperator& b,
                                  const Tolerances& tol = {}) {
  EnergyLedger ledger;
  ledger.energies.reserve(traj.operators.size());
  for (const PsdOperator& r : traj.operators) ledger.energies.push_back(task_energy(b, r));
  for (long n = 0; n < traj.steps(); ++n) {
    const auto i = static_cast<std::size_t>(n);
    ledger.drops.push_back(ledger.energies[i] - ledger.energies[i + 1]);
    ledger.hs_drops.push_back(energy_drop(b, traj.operators[i], traj.effects_used[i], tol));
  }
  return ledger;
}

}  // namespace shortkern
