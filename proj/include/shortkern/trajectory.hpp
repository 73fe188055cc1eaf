#pragma once

#include <string>
#include <vector>

#include "shortkern/error.hpp"
#include "shortkern/operator_core.hpp"

namespace shortkern {

/// Finite stand-in for strong convergence: stop once ||R_n - R_{n+1}||_F <= frob_tol.
struct StoppingRule {
  long max_steps = 100;
  double frob_tol = 1e-12;

  void validate() const {
    if (max_steps < 1) throw Error(ErrorCode::ConfigError, "max_steps must be >= 1");
    if (!(frob_tol > 0.0)) throw Error(ErrorCode::ConfigError, "frob_tol must be > 0");
  }
};

/// R_0, ..., R_N together with the effects T_1..T_N and the removed pieces
/// D^(m) = R_m^{1/2} T_{m+1} R_m^{1/2}.
///
/// A step whose delta falls below the stopping tolerance is not stored: when
/// converged, operators.back() is the fixed point and final_delta holds the
/// size of the rejected step.
struct Trajectory {
  std::vector<PsdOperator> operators;
  std::vector<Effect> effects_used;
  std::vector<PsdOperator> increments;
  std::vector<double> step_deltas;
  bool converged = false;
  double final_delta = 0.0;

  long steps() const { return static_cast<long>(effects_used.size()); }
  long dim() const { return operators.front().dim(); }
  const PsdOperator& initial() const { return operators.front(); }
  const PsdOperator& last() const { return operators.back(); }
};

}  // namespace shortkern
