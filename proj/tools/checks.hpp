#pragma once

// Seeded property suites over every module, run by `shortkern check`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "instances.hpp"
#include "report.hpp"
#include "shortkern/shortkern.hpp"

namespace shortkern::app {

struct PropertyResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;

  bool pass() const { return std::isfinite(max_error) && max_error <= tolerance; }
};

struct CheckSuite {
  std::string name;
  std::function<std::vector<PropertyResult>(std::uint64_t seed)> run;
};

struct TrajectoryCase {
  FeatureMap features;
  Trajectory trajectory;
};

/// `count` trajectories cycling through all four schedule families, D <= max_dim,
/// at most max_steps steps, half of them started from a random SPD operator.
inline std::vector<TrajectoryCase> mixed_trajectories(std::uint64_t seed, int count, long max_dim = 20,
                                                      long max_steps = 40) {
  using instances::ScheduleKind;
  constexpr ScheduleKind kKinds[] = {ScheduleKind::ConstantProjection, ScheduleKind::CovarianceSpectral,
                                     ScheduleKind::Greedy, ScheduleKind::ExplicitList};
  SplitMix64 rng(seed);
  std::vector<TrajectoryCase> out;
  for (int i = 0; i < count; ++i) {
    const long n = instances::uniform_index(rng, 2, max_dim);
    const EffectSchedule sched = instances::random_schedule(rng, n, kKinds[i % 4], max_steps);
    const PsdOperator r0 = i % 2 == 0 ? PsdOperator::identity(n) : PsdOperator(instances::random_spd(rng, n));
    FeatureMap v = instances::random_features(rng, n, 1 + i % 2, instances::uniform_index(rng, 2, 30));
    out.push_back({std::move(v), run_trajectory(r0, sched, {max_steps, 1e-14})});
  }
  return out;
}

/// Largest violation of A >= 0, i.e. max(0, -lambda_min(A)).
inline double psd_violation(const Matrix& a) { return std::max(0.0, -min_eigenvalue(symmetrize(a))); }

namespace checks {

inline std::vector<PropertyResult> operator_core(std::uint64_t seed) {
  SplitMix64 rng(seed);
  PropertyResult sqrt_err{"psd_sqrt_squares_back", 0.0, 1e-10};
  PropertyResult pinv_err{"pseudo_inverse_penrose", 0.0, 1e-10};
  PropertyResult proj_err{"projections_sum_to_identity", 0.0, 1e-10};
  for (int trial = 0; trial < 20; ++trial) {
    const long n = instances::uniform_index(rng, 1, 20);
    const Matrix a = instances::random_spd(rng, n);
    const Matrix root = psd_sqrt(PsdOperator(a)).matrix();
    sqrt_err.max_error = std::max(sqrt_err.max_error, (root * root - a).norm() / (1.0 + a.norm()));
    const Matrix low = instances::random_low_rank(rng, n, std::max(1L, n / 2));
    const Matrix p = pseudo_inverse(PsdOperator(low)).matrix();
    pinv_err.max_error = std::max(pinv_err.max_error, (low * p * low - low).norm() / (1.0 + low.norm()));
    const SubspaceSpec u = instances::random_subspace(rng, n, instances::uniform_index(rng, 1, n));
    proj_err.max_error =
        std::max(proj_err.max_error, (orthogonal_projection(u).matrix() + complement_projection(u).matrix() -
                                      Matrix::Identity(n, n))
                                         .norm());
  }
  return {sqrt_err, pinv_err, proj_err};
}

inline std::vector<PropertyResult> monotonicity(std::uint64_t seed) {
  PropertyResult ops{"operator_loewner_decreasing", 0.0, 1e-10};
  PropertyResult grams{"gram_loewner_decreasing", 0.0, 1e-10};
  for (const auto& [v, traj] : mixed_trajectories(seed, 50)) {
    for (long m = 0; m < traj.steps(); ++m) {
      const auto i = static_cast<std::size_t>(m);
      const PsdOperator& r0 = traj.operators[i];
      const PsdOperator& r1 = traj.operators[i + 1];
      ops.max_error = std::max(ops.max_error, psd_violation(r0.matrix() - r1.matrix()));
      grams.max_error = std::max(
          grams.max_error, psd_violation(gram_operator(v, r0).matrix() - gram_operator(v, r1).matrix()));
    }
  }
  return {ops, grams};
}

inline std::vector<PropertyResult> telescoping(std::uint64_t seed) {
  PropertyResult res{"operator_telescoping", 0.0, 1e-9};
  for (const auto& c : mixed_trajectories(seed, 50)) res.max_error = std::max(res.max_error, telescoping_error(c.trajectory));
  return {res};
}

inline std::vector<PropertyResult> kernel_telescoping(std::uint64_t seed) {
  PropertyResult res{"gram_telescoping", 0.0, 1e-9};
  for (const auto& [v, traj] : mixed_trajectories(seed, 50)) {
    Matrix gap = gram_operator(v, traj.initial()).matrix() - gram_operator(v, traj.last()).matrix();
    for (long m = 0; m < traj.steps(); ++m) {
      const auto i = static_cast<std::size_t>(m);
      gap -= gram_increment(v, traj.operators[i], traj.effects_used[i]).matrix();
    }
    res.max_error = std::max(res.max_error, gap.norm());
  }
  return {res};
}

inline std::vector<PropertyResult> closed_form(std::uint64_t seed) {
  SplitMix64 rng(seed);
  PropertyResult res{"scaled_projection_closed_form", 0.0, 1e-10};
  for (double c : {0.1, 0.5, 0.9}) {
    for (bool rotated : {false, true}) {
      const long n = 6;
      const Matrix q = rotated ? instances::random_orthogonal(rng, n) : Matrix::Identity(n, n);
      std::vector<Vector> basis = {q.col(0), q.col(1)};
      const SubspaceSpec u(n, basis);
      const Trajectory traj = run_trajectory(PsdOperator::identity(n), EffectSchedule::constant_projection(u, c),
                                             {60, std::numeric_limits<double>::min()});
      const Matrix p = orthogonal_projection(u).matrix();
      // A converged trajectory's fixed point stands in for every later R_n.
      for (long k = 0; k <= 60; ++k) {
        const Matrix expected = complement_projection(u).matrix() + std::pow(1.0 - c, static_cast<double>(k)) * p;
        const auto at = static_cast<std::size_t>(std::min(k, traj.steps()));
        res.max_error = std::max(res.max_error, (traj.operators[at].matrix() - expected).norm());
      }
    }
  }
  return {res};
}

inline std::vector<PropertyResult> block_reduction(std::uint64_t seed) {
  SplitMix64 rng(seed);
  PropertyResult res{"block_reduction", 0.0, 1e-10};
  for (int trial = 0; trial < 20; ++trial) {
    const long n = instances::uniform_index(rng, 2, 20);
    const SubspaceSpec u = instances::random_subspace(rng, n, instances::uniform_index(rng, 1, n - 1));
    const Trajectory traj = run_trajectory(PsdOperator::identity(n),
                                           EffectSchedule::constant_projection(u, rng.uniform(0.1, 1.0)), {40, 1e-14});
    res.max_error = std::max(res.max_error, block_reduction_error(traj, u));
  }
  return {res};
}

inline std::vector<PropertyResult> exhaustion(std::uint64_t seed) {
  SplitMix64 rng(seed);
  PropertyResult res{"limit_is_complement_projection", 0.0, 1e-8};
  for (int trial = 0; trial < 20; ++trial) {
    const long n = instances::uniform_index(rng, 2, 20);
    const SubspaceSpec u = instances::random_subspace(rng, n, instances::uniform_index(rng, 1, n - 1));
    const Trajectory traj = run_trajectory(PsdOperator::identity(n),
                                           EffectSchedule::constant_projection(u, rng.uniform(0.2, 1.0)), {500, 1e-12});
    res.max_error = std::max(res.max_error, traj.converged ? exhaustion_error(traj, u)
                                                           : std::numeric_limits<double>::infinity());
  }
  return {res};
}

inline std::vector<PropertyResult> dominance(std::uint64_t seed) {
  SplitMix64 rng(seed);
  // Errors count misclassified witnesses.
  PropertyResult accepted{"dominance_accepts_complement_witnesses", 0.0, 0.0};
  PropertyResult rejected{"dominance_rejects_witnesses_on_u", 0.0, 0.0};
  for (int trial = 0; trial < 100; ++trial) {
    const long n = instances::uniform_index(rng, 3, 12);
    const SubspaceSpec u = instances::random_subspace(rng, n, instances::uniform_index(rng, 1, n - 1));
    const Matrix perp = complement_projection(u).matrix();
    const Trajectory traj =
        run_trajectory(PsdOperator::identity(n), EffectSchedule::constant_projection(u, 1.0), {5, 1e-12});
    const FeatureMap v = instances::random_features(rng, n, 1 + trial % 2, 6);
    std::vector<std::pair<long, long>> pairs;
    for (long i = 0; i < v.size(); ++i) pairs.emplace_back(i, i);

    const Matrix good = symmetrize(perp * instances::random_contraction(rng, n) * perp);
    if (!dominance_check(v, ContractionWitness(PsdOperator::unchecked(good)), traj.last(), pairs, {}, seed + trial))
      accepted.max_error += 1.0;

    const Matrix on_u = orthogonal_projection(u).matrix();
    const Matrix bad = symmetrize(0.5 * instances::random_contraction(rng, n) + 0.5 * rng.uniform(0.01, 1.0) * on_u);
    if ((on_u * bad * on_u).norm() <= 1e-3 || loewner_leq(PsdOperator(bad), PsdOperator::unchecked(perp), Tolerances{}.psd))
      rejected.max_error += 1.0;
  }
  return {accepted, rejected};
}

struct KrrCase {
  FeatureMap features;
  Labels labels;
  Trajectory trajectory;
  double lambda;
};

inline std::vector<KrrCase> krr_cases(std::uint64_t seed, int count) {
  SplitMix64 rng(seed);
  constexpr double kLambdas[] = {0.01, 0.1, 1.0};
  std::vector<KrrCase> out;
  const auto base = mixed_trajectories(seed ^ 0x9e3779b97f4a7c15ULL, count, 12, 20);
  for (int i = 0; i < count; ++i) {
    const Trajectory& traj = base[static_cast<std::size_t>(i)].trajectory;
    const long d = 1 + i % 2;
    const long m = instances::uniform_index(rng, 2, 40);
    FeatureMap v = instances::random_features(rng, traj.dim(), d, m);
    Labels y(rng.gaussian_matrix(m, d));
    out.push_back({std::move(v), std::move(y), traj, kLambdas[i % 3]});
  }
  return out;
}

inline std::vector<PropertyResult> path_identity(std::uint64_t seed) {
  PropertyResult res{"coefficient_path_identity", 0.0, 1e-8};
  for (const KrrCase& c : krr_cases(seed, 20)) {
    const KrrPath path = krr_path(c.trajectory, c.features, c.labels, {c.lambda});
    res.max_error = std::max(res.max_error, path.max_path_error() / (1.0 + c.labels.stacked().norm()));
  }
  return {res};
}

inline std::vector<PropertyResult> nuisance_removal(std::uint64_t seed) {
  SplitMix64 rng(seed);
  PropertyResult align{"final_nuisance_alignment", 0.0, 1e-8};
  PropertyResult limit{"limit_predictor_matches_complement_fit", 0.0, 1e-7};
  for (int trial = 0; trial < 10; ++trial) {
    const long n = instances::uniform_index(rng, 2, 12);
    const SubspaceSpec u = instances::random_subspace(rng, n, instances::uniform_index(rng, 1, n - 1));
    const long m = instances::uniform_index(rng, 3, 30);
    const FeatureMap v = instances::random_features(rng, n, 1, m);
    const Labels y(rng.gaussian_matrix(m, 1));
    const Trajectory traj = run_trajectory(PsdOperator::identity(n),
                                           EffectSchedule::constant_projection(u, rng.uniform(0.3, 1.0)), {500, 1e-12});
    if (!traj.converged) {
      align.max_error = std::numeric_limits<double>::infinity();
      continue;
    }
    const KrrPath path = krr_path(traj, v, y, {0.1});
    for (long k = 0; k < u.rank(); ++k) {
      const auto a = nuisance_alignment(path, v, u.basis_vector(k), PsdOperator::identity(n));
      align.max_error = std::max(align.max_error, std::abs(a.back()));
    }
    const PsdOperator perp = complement_projection(u);
    const Predictor fitted(v, traj.last(), path.coefficients.back());
    const Predictor direct(v, perp, krr_fit(gram_operator(v, perp), y, {0.1}));
    for (long i = 0; i < m; ++i)
      limit.max_error =
          std::max(limit.max_error, (krr_predict(fitted, v.at(i)) - krr_predict(direct, v.at(i))).norm());
  }
  return {align, limit};
}

inline std::vector<PropertyResult> rkhs_monotonicity(std::uint64_t seed) {
  SplitMix64 rng(seed);
  PropertyResult res{"rkhs_norm_nondecreasing", 0.0, 1e-8};
  for (const auto& c : mixed_trajectories(seed, 20, 10, 20)) {
    const Trajectory& traj = c.trajectory;
    for (long k = 0; k < traj.steps(); ++k) {
      const auto i = static_cast<std::size_t>(k);
      const auto u = instances::sample_in_range(rng, traj.operators[i + 1]);
      if (!u) continue;
      const double before = rkhs_norm_sq(traj.operators[i], *u);
      const double after = rkhs_norm_sq(traj.operators[i + 1], *u);
      res.max_error = std::max(res.max_error, std::isfinite(after) ? before - after : after);
    }
  }
  return {res};
}

inline std::vector<PropertyResult> greedy(std::uint64_t seed) {
  SplitMix64 rng(seed);
  PropertyResult top{"greedy_drop_is_top_eigenvalue", 0.0, 1e-9};
  PropertyResult dominates{"greedy_dominates_random_rank_one", 0.0, 1e-9};
  PropertyResult ledger_gap{"energy_drop_formulas_agree", 0.0, 1e-9};
  PropertyResult ledger_rise{"energy_nonincreasing", 0.0, 1e-10};
  for (int trial = 0; trial < 10; ++trial) {
    const long n = instances::uniform_index(rng, 2, 12);
    const TaskOperator b{PsdOperator(instances::random_spd(rng, n))};
    const Trajectory traj = run_trajectory(PsdOperator::identity(n), EffectSchedule::greedy(b), {n, 1e-12});
    for (long k = 0; k < traj.steps(); ++k) {
      const PsdOperator& r = traj.operators[static_cast<std::size_t>(k)];
      const GreedyChoice g = greedy_effect(b, r);
      top.max_error = std::max(top.max_error, std::abs(g.drop - max_eigenvalue(conjugate_task(b, r).matrix())));
      for (int s = 0; s < 1000; ++s) {
        const Vector w = rng.unit_vector(n);
        dominates.max_error =
            std::max(dominates.max_error, energy_drop(b, r, Effect::unchecked(w * w.transpose())) - g.drop);
      }
    }
    const EnergyLedger ledger = energy_ledger(traj, b);
    ledger_gap.max_error = std::max(ledger_gap.max_error, ledger.max_drop_discrepancy());
    for (std::size_t i = 0; i + 1 < ledger.energies.size(); ++i)
      ledger_rise.max_error = std::max(ledger_rise.max_error, (ledger.energies[i + 1] - ledger.energies[i]) /
                                                                  (1.0 + std::abs(ledger.energies.front())));
  }
  return {top, dominates, ledger_gap, ledger_rise};
}

}  // namespace checks

inline const std::vector<CheckSuite>& check_suites() {
  static const std::vector<CheckSuite> suites = {
      {"operator_core", checks::operator_core},
      {"monotonicity", checks::monotonicity},
      {"telescoping", checks::telescoping},
      {"kernel_telescoping", checks::kernel_telescoping},
      {"closed_form", checks::closed_form},
      {"block_reduction", checks::block_reduction},
      {"exhaustion", checks::exhaustion},
      {"dominance", checks::dominance},
      {"path_identity", checks::path_identity},
      {"nuisance_removal", checks::nuisance_removal},
      {"rkhs_monotonicity", checks::rkhs_monotonicity},
      {"greedy", checks::greedy},
  };
  return suites;
}

/// Runs every suite whose name contains `filter`, printing one line per
/// property. Returns true iff all selected properties pass; an empty
/// selection is a failure.
inline bool run_checks(const std::string& filter, std::ostream& out, std::uint64_t seed = 0) {
  bool all = true;
  bool any = false;
  for (std::size_t s = 0; s < check_suites().size(); ++s) {
    const CheckSuite& suite = check_suites()[s];
    if (suite.name.find(filter) == std::string::npos) continue;
    any = true;
    std::vector<PropertyResult> results;
    try {
      results = suite.run(seed + 1000 * (s + 1));
    } catch (const Error& e) {
      results = {{suite.name + " (" + e.what() + ")", std::numeric_limits<double>::infinity(), 0.0}};
    }
    for (const PropertyResult& r : results) {
      out << suite.name << '/' << r.name << "  max_error=" << format_double(r.max_error)
          << "  tolerance=" << std::setprecision(3) << r.tolerance << "  " << (r.pass() ? "PASS" : "FAIL") << '\n';
      all = all && r.pass();
    }
  }
  if (!any) out << "no suite matches '" << filter << "'\n";
  return all && any;
}

}  // namespace shortkern::app
