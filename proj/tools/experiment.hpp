#pragma once

// The `run` pipeline: trajectory, KRR path and energy ledger for one config.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "report.hpp"
#include "shortkern/shortkern.hpp"

namespace shortkern::app {

struct Problem {
  FeatureMap features;
  Labels labels;
};

struct ExperimentSummary {
  bool converged = false;
  long steps = 0;
  double final_delta = 0.0;
  double max_telescoping_error = 0.0;
  double max_gram_telescoping_error = 0.0;
  double max_path_error = 0.0;
  double path_tolerance = 0.0;
  double worst_operator_monotonicity = 0.0;  // most negative eigenvalue of R_n - R_{n+1}
  double worst_gram_monotonicity = 0.0;
  double max_energy_drop_discrepancy = 0.0;
  bool energy_nonincreasing = true;
  std::optional<double> exhaustion_error;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

inline double sign_label(double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }

/// m points uniform on [-1,1]^2 (s drawn before u) with V(s,u) = (s,u)^T and
/// labels sign(s + alpha u).
inline Problem tilted_plane_problem(SplitMix64& rng, long points, double alpha) {
  std::vector<Vector> pts;
  Vector y(points);
  for (long i = 0; i < points; ++i) {
    Vector p(2);
    p(0) = rng.uniform(-1.0, 1.0);
    p(1) = rng.uniform(-1.0, 1.0);
    y(i) = sign_label(p(0) + alpha * p(1));
    pts.push_back(std::move(p));
  }
  return {FeatureMap::from_vectors(pts), Labels::scalar(y)};
}

namespace detail {

/// {"points": [{"V": D x d rows (or a D-vector when d = 1), "y": d values or a number}]}
inline Problem explicit_problem(const std::filesystem::path& path, long dim, long out_dim) {
  const json doc = read_json(path);
  const json& pts = require(doc, "points");
  if (!pts.is_array() || pts.empty()) config_error("points must be a nonempty array");
  std::vector<Matrix> mats;
  Matrix y(static_cast<long>(pts.size()), out_dim);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const json& v = require(pts[i], "V");
    const json& yi = require(pts[i], "y");
    if (out_dim == 1 && !v.empty() && !v[0].is_array()) {
      mats.emplace_back(as_vector(v, dim, "points[].V"));
    } else {
      mats.push_back(as_matrix(v, dim, out_dim, "points[].V"));
    }
    const long row = static_cast<long>(i);
    if (yi.is_number() && out_dim == 1) {
      y(row, 0) = yi.get<double>();
    } else {
      y.row(row) = as_vector(yi, out_dim, "points[].y").transpose();
    }
  }
  return {FeatureMap(std::move(mats)), Labels(std::move(y))};
}

inline PsdOperator covariance_or_default(const json& s, const char* key, long dim, const PsdOperator& fallback,
                                         const Tolerances& tol) {
  return s.contains(key) ? as_psd(s.at(key), dim, std::string("schedule.") + key, tol) : fallback;
}

}  // namespace detail

inline Problem build_problem(const ExperimentConfig& cfg, SplitMix64& rng) {
  if (const auto* t = std::get_if<TiltedPlaneSource>(&cfg.features)) return tilted_plane_problem(rng, t->points, t->alpha);
  if (const auto* g = std::get_if<RandomGaussianSource>(&cfg.features)) {
    FeatureMap v = instances::random_features(rng, cfg.dimension, cfg.output_dim, g->points);
    // Labels from a Gaussian linear teacher: y_i = V(s_i)^T w.
    const Vector w = rng.gaussian_vector(cfg.dimension);
    Matrix y(g->points, cfg.output_dim);
    for (long i = 0; i < g->points; ++i) y.row(i) = (v.at(i).transpose() * w).transpose();
    return {std::move(v), Labels(std::move(y))};
  }
  return detail::explicit_problem(std::get<ExplicitSource>(cfg.features).path, cfg.dimension, cfg.output_dim);
}

inline EffectSchedule build_schedule(const ExperimentConfig& cfg, const FeatureMap& v) {
  using namespace detail;
  const json& s = cfg.schedule;
  const std::string kind = s.at("kind").get<std::string>();
  const long dim = cfg.dimension;
  const Tolerances& tol = cfg.tolerances;
  return user_input("schedule", [&] {
    if (kind == "constant_projection") {
      const SubspaceSpec u(dim, as_vector_list(s.at("basis"), dim, "schedule.basis"), tol);
      return EffectSchedule::constant_projection(u, s.at("scale").get<double>());
    }
    if (kind == "covariance_spectral") {
      std::vector<double> th = s.at("thresholds").get<std::vector<double>>();
      return EffectSchedule::covariance_spectral(covariance_or_default(s, "covariance", dim, empirical_covariance(v), tol),
                                                 std::move(th));
    }
    if (kind == "greedy") {
      return EffectSchedule::greedy(TaskOperator{covariance_or_default(s, "task", dim, empirical_covariance(v), tol)});
    }
    std::vector<Effect> effects;
    for (const json& e : s.at("effects")) effects.emplace_back(as_psd(e, dim, "schedule.effects[]", tol), tol);
    return EffectSchedule::explicit_list(std::move(effects));
  });
}

/// Task operator for the energy column: config "task", else the greedy
/// schedule's B, else the empirical covariance.
inline TaskOperator energy_task(const ExperimentConfig& cfg, const EffectSchedule& schedule, const FeatureMap& v) {
  if (cfg.task) return TaskOperator{detail::user_input("task", [&] { return PsdOperator(*cfg.task, cfg.tolerances); })};
  if (const auto* g = schedule.get_if<GreedyRankOne>()) return g->task;
  return TaskOperator{empirical_covariance(v)};
}

/// Directions whose alignment is reported: config "nuisance_basis", else the
/// subspace of a constant projection schedule.
inline std::vector<Vector> alignment_directions(const ExperimentConfig& cfg, const EffectSchedule& schedule) {
  if (cfg.nuisance_basis) return *cfg.nuisance_basis;
  std::vector<Vector> out;
  if (const auto* c = schedule.get_if<ConstantProjection>())
    for (long k = 0; k < c->subspace.rank(); ++k) out.push_back(c->subspace.basis_vector(k));
  return out;
}

inline double most_negative_eigenvalue(const Matrix& m) { return std::min(0.0, min_eigenvalue(symmetrize(m))); }

/// Opens `dir` for exclusive writing; an existing directory is replaced only
/// with `force`.
inline void prepare_output_dir(const std::filesystem::path& dir, bool force) {
  if (dir.empty()) throw Error(ErrorCode::ConfigError, "no output directory (set \"outputs\" or --out)");
  if (std::filesystem::exists(dir)) {
    if (!force) throw Error(ErrorCode::ConfigError, "output directory " + dir.string() + " exists (use --force)");
  }
  std::filesystem::create_directories(dir);
}

inline ExperimentSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  const Tolerances& tol = cfg.tolerances;
  SplitMix64 rng(cfg.seed);
  const Problem prob = build_problem(cfg, rng);
  if (prob.features.feature_dim() != cfg.dimension || prob.features.output_dim() != cfg.output_dim)
    throw Error(ErrorCode::ConfigError, "feature data does not match dimension/output_dim");
  const EffectSchedule schedule = build_schedule(cfg, prob.features);
  const PsdOperator r0 = cfg.initial ? detail::user_input("initial", [&] { return PsdOperator(*cfg.initial, tol); })
                                     : PsdOperator::identity(cfg.dimension);
  const TaskOperator task = energy_task(cfg, schedule, prob.features);
  const std::vector<Vector> directions = alignment_directions(cfg, schedule);

  log(LogLevel::Info, "running trajectory in D = " + std::to_string(cfg.dimension));
  const Trajectory traj = run_trajectory(r0, schedule, cfg.stopping, tol);
  log(LogLevel::Info, "trajectory stopped after " + std::to_string(traj.steps()) + " steps");
  const KrrPath path = krr_path(traj, prob.features, prob.labels, cfg.ridge, tol);
  const EnergyLedger ledger = energy_ledger(traj, task, tol);

  std::vector<std::vector<double>> alignments;
  for (const Vector& g : directions) alignments.push_back(nuisance_alignment(path, prob.features, g, r0));

  ExperimentSummary sum;
  sum.converged = traj.converged;
  sum.steps = traj.steps();
  sum.final_delta = traj.final_delta;
  sum.path_tolerance = tol.path * (1.0 + prob.labels.stacked().norm());
  sum.max_path_error = path.max_path_error();
  sum.max_energy_drop_discrepancy = ledger.max_drop_discrepancy();
  sum.energy_nonincreasing = ledger.nonincreasing();

  prepare_output_dir(out_dir, true);
  {
    CsvWriter csv((out_dir / "trajectory.csv").string());
    csv.header({"n", "frob_delta", "telescoping_error", "energy", "min_eig"});
    for (long n = 0; n <= traj.steps(); ++n) {
      const auto i = static_cast<std::size_t>(n);
      const double delta = n == 0 ? 0.0 : traj.step_deltas[i - 1];
      const double tele = telescoping_error(traj, n);
      sum.max_telescoping_error = std::max(sum.max_telescoping_error, tele);
      csv.row({std::to_string(n), format_double(delta), format_double(tele), format_double(ledger.energies[i]),
               format_double(min_eigenvalue(traj.operators[i].matrix()))});
    }
  }
  Matrix gram_gap = path.grams.front().matrix() - path.grams.back().matrix();
  for (long m = 0; m < traj.steps(); ++m) {
    const auto i = static_cast<std::size_t>(m);
    gram_gap -= path.increments[i].matrix();
    sum.worst_operator_monotonicity = std::min(
        sum.worst_operator_monotonicity,
        most_negative_eigenvalue(traj.operators[i].matrix() - traj.operators[i + 1].matrix()));
    sum.worst_gram_monotonicity = std::min(
        sum.worst_gram_monotonicity, most_negative_eigenvalue(path.grams[i].matrix() - path.grams[i + 1].matrix()));
  }
  sum.max_gram_telescoping_error = gram_gap.norm();
  {
    CsvWriter csv((out_dir / "krr_path.csv").string());
    std::vector<std::string> head = {"n", "coef_norm", "path_identity_residual", "path_pairing"};
    for (std::size_t k = 0; k < directions.size(); ++k) head.push_back("alignment_" + std::to_string(k));
    csv.header(head);
    for (std::size_t n = 0; n < path.coefficients.size(); ++n) {
      std::vector<std::string> row = {std::to_string(n), format_double(path.coefficients[n].norm()),
                                      format_double(n == 0 ? 0.0 : path.path_errors[n - 1]),
                                      format_double(n == 0 ? 0.0 : path.path_pairings[n - 1])};
      for (const auto& a : alignments) row.push_back(format_double(a[n]));
      csv.row(row);
    }
  }

  if (const auto* c = schedule.get_if<ConstantProjection>(); c && traj.converged && r0.matrix().isIdentity(0.0))
    sum.exhaustion_error = exhaustion_error(traj, c->subspace);

  const double r_scale = 1.0 + r0.matrix().norm();
  const double g_scale = 1.0 + path.grams.front().matrix().norm();
  if (sum.max_telescoping_error > tol.recon * r_scale) sum.violations.emplace_back("telescoping");
  if (sum.max_gram_telescoping_error > tol.recon * g_scale) sum.violations.emplace_back("gram_telescoping");
  if (sum.worst_operator_monotonicity < -tol.psd * r_scale) sum.violations.emplace_back("operator_monotonicity");
  if (sum.worst_gram_monotonicity < -tol.psd * g_scale) sum.violations.emplace_back("gram_monotonicity");
  if (sum.max_path_error > sum.path_tolerance) sum.violations.emplace_back("path_identity");
  const double e_scale = 1.0 + std::abs(ledger.energies.front());
  if (sum.max_energy_drop_discrepancy > tol.path * e_scale) sum.violations.emplace_back("energy_drop");
  if (!sum.energy_nonincreasing) sum.violations.emplace_back("energy_monotonicity");
  for (const std::string& v : sum.violations) log(LogLevel::Error, "invariant violated: " + v);

  json out = {{"converged", sum.converged},
              {"steps", sum.steps},
              {"final_delta", sum.final_delta},
              {"max_telescoping_error", sum.max_telescoping_error},
              {"max_gram_telescoping_error", sum.max_gram_telescoping_error},
              {"max_path_identity_residual", sum.max_path_error},
              {"path_identity_tolerance", sum.path_tolerance},
              {"worst_operator_monotonicity", sum.worst_operator_monotonicity},
              {"worst_gram_monotonicity", sum.worst_gram_monotonicity},
              {"max_energy_drop_discrepancy", sum.max_energy_drop_discrepancy},
              {"energy_nonincreasing", sum.energy_nonincreasing},
              {"exhaustion_error", sum.exhaustion_error ? json(*sum.exhaustion_error) : json(nullptr)},
              {"final_energy", ledger.energies.back()},
              {"generator", SplitMix64::kAlgorithm},
              {"seed", cfg.seed},
              {"violations", sum.violations}};
  std::ofstream(out_dir / "summary.json", std::ios::binary | std::ios::trunc) << out.dump(2) << '\n';
  return sum;
}

}  // namespace shortkern::app
