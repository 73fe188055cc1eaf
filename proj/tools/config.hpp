#pragma once

// JSON experiment configurations.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "shortkern/shortkern.hpp"

namespace shortkern::app {

using json = nlohmann::json;

struct TiltedPlaneSource {
  long points;
  double alpha;
};

struct RandomGaussianSource {
  long points;
};

struct ExplicitSource {
  std::filesystem::path path;
};

using FeatureSource = std::variant<TiltedPlaneSource, RandomGaussianSource, ExplicitSource>;

struct ExperimentConfig {
  long dimension = 0;
  long output_dim = 1;
  std::uint64_t seed = 0;
  FeatureSource features = RandomGaussianSource{10};
  json schedule;  // validated at parse time, built once features are known
  std::optional<Matrix> initial;
  std::optional<Matrix> task;
  std::optional<std::vector<Vector>> nuisance_basis;
  RidgeConfig ridge{0.0};
  StoppingRule stopping;
  Tolerances tolerances;
  std::filesystem::path outputs;
};

struct TiltedDemoConfig {
  double c = 0.4;
  double alpha = 1.0;
  std::vector<std::optional<long>> n_list;  // nullopt is the n = infinity sentinel
  long points = 200;
  std::uint64_t seed = 0;
  double lambda = 0.1;
  std::filesystem::path outputs;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

inline const json& require(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) config_error(std::string("missing key '") + key + "'");
  return obj.at(key);
}

inline double as_number(const json& v, const std::string& what) {
  if (!v.is_number()) config_error(what + " must be a number");
  return v.get<double>();
}

inline long as_count(const json& v, const std::string& what) {
  if (!v.is_number_integer()) config_error(what + " must be an integer");
  return v.get<long>();
}

inline Vector as_vector(const json& v, long expected, const std::string& what) {
  if (!v.is_array()) config_error(what + " must be an array");
  if (static_cast<long>(v.size()) != expected)
    config_error(what + " has length " + std::to_string(v.size()) + ", expected " + std::to_string(expected));
  Vector out(expected);
  for (long i = 0; i < expected; ++i) out(i) = as_number(v[static_cast<std::size_t>(i)], what);
  return out;
}

inline Matrix as_matrix(const json& v, long rows, long cols, const std::string& what) {
  if (!v.is_array() || static_cast<long>(v.size()) != rows)
    config_error(what + " must be an array of " + std::to_string(rows) + " rows");
  Matrix out(rows, cols);
  for (long i = 0; i < rows; ++i) out.row(i) = as_vector(v[static_cast<std::size_t>(i)], cols, what).transpose();
  return out;
}

inline std::vector<Vector> as_vector_list(const json& v, long dim, const std::string& what) {
  if (!v.is_array()) config_error(what + " must be an array of vectors");
  std::vector<Vector> out;
  for (const json& item : v) out.push_back(as_vector(item, dim, what));
  return out;
}

/// Library validation failures on user input are configuration errors.
template <typename Fn>
auto user_input(const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    config_error(what + ": " + e.what());
  }
}

inline PsdOperator as_psd(const json& v, long dim, const std::string& what, const Tolerances& tol) {
  Matrix m = as_matrix(v, dim, dim, what);
  return user_input(what, [&] { return PsdOperator(std::move(m), tol); });
}

inline Tolerances parse_tolerances(const json& v) {
  Tolerances t;
  if (v.is_null()) return t;
  if (!v.is_object()) config_error("tolerances must be an object");
  const std::pair<const char*, double*> fields[] = {
      {"sym", &t.sym},     {"psd", &t.psd},     {"recon", &t.recon}, {"orth", &t.orth},
      {"cutoff_rel", &t.cutoff_rel}, {"sign", &t.sign}, {"range", &t.range},
      {"solve", &t.solve}, {"path", &t.path},   {"align", &t.align}};
  for (auto it = v.begin(); it != v.end(); ++it) {
    bool known = false;
    for (const auto& [name, slot] : fields) {
      if (it.key() == name) {
        *slot = as_number(it.value(), std::string("tolerances.") + name);
        if (!(*slot > 0.0)) config_error(std::string("tolerances.") + name + " must be > 0");
        known = true;
      }
    }
    if (!known) config_error("unknown tolerance '" + it.key() + "'");
  }
  return t;
}

inline void validate_schedule_shape(const json& s, long dim) {
  const std::string kind = require(s, "kind").is_string() ? s.at("kind").get<std::string>() : "";
  if (kind == "constant_projection") {
    as_vector_list(require(s, "basis"), dim, "schedule.basis");
    const double scale = as_number(require(s, "scale"), "schedule.scale");
    if (!(scale > 0.0 && scale <= 1.0)) config_error("schedule.scale must lie in (0, 1]");
  } else if (kind == "covariance_spectral") {
    const json& th = require(s, "thresholds");
    if (!th.is_array() || th.empty()) config_error("schedule.thresholds must be a nonempty array");
    for (const json& t : th)
      if (!(as_number(t, "schedule.thresholds") >= 0.0)) config_error("schedule.thresholds must be >= 0");
    if (s.contains("covariance")) as_matrix(s.at("covariance"), dim, dim, "schedule.covariance");
  } else if (kind == "greedy") {
    if (s.contains("task")) as_matrix(s.at("task"), dim, dim, "schedule.task");
  } else if (kind == "explicit_list") {
    const json& effects = require(s, "effects");
    if (!effects.is_array() || effects.empty()) config_error("schedule.effects must be a nonempty array");
    for (const json& e : effects) as_matrix(e, dim, dim, "schedule.effects[]");
  } else {
    config_error("unknown schedule kind '" + kind + "'");
  }
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    config_error(path.string() + ": " + e.what());
  }
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const json& doc, const std::filesystem::path& base_dir = ".") {
  using namespace detail;
  if (!doc.is_object()) config_error("config must be a JSON object");
  ExperimentConfig cfg;
  cfg.dimension = as_count(require(doc, "dimension"), "dimension");
  if (cfg.dimension < 1) config_error("dimension must be >= 1");
  if (doc.contains("output_dim")) cfg.output_dim = as_count(doc.at("output_dim"), "output_dim");
  if (cfg.output_dim < 1) config_error("output_dim must be >= 1");
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned() && !doc.at("seed").is_number_integer())
      config_error("seed must be an unsigned integer");
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  }
  cfg.tolerances = parse_tolerances(doc.value("tolerances", json()));

  const json& feats = require(doc, "features");
  const std::string source = require(feats, "source").is_string() ? feats.at("source").get<std::string>() : "";
  if (source == "tilted_plane") {
    if (cfg.dimension != 2 || cfg.output_dim != 1) config_error("tilted_plane needs dimension 2 and output_dim 1");
    const double alpha = feats.contains("alpha") ? as_number(feats.at("alpha"), "features.alpha") : 1.0;
    cfg.features = TiltedPlaneSource{as_count(require(feats, "m"), "features.m"), alpha};
  } else if (source == "random_gaussian") {
    cfg.features = RandomGaussianSource{as_count(require(feats, "m"), "features.m")};
  } else if (source == "explicit") {
    const json& p = require(feats, "path");
    if (!p.is_string()) config_error("features.path must be a string");
    std::filesystem::path path = p.get<std::string>();
    if (path.is_relative()) path = base_dir / path;
    if (!std::filesystem::exists(path)) config_error("feature file " + path.string() + " does not exist");
    cfg.features = ExplicitSource{path};
  } else {
    config_error("unknown feature source '" + source + "'");
  }
  if (const auto* t = std::get_if<TiltedPlaneSource>(&cfg.features); t && t->points < 1)
    config_error("features.m must be >= 1");
  if (const auto* g = std::get_if<RandomGaussianSource>(&cfg.features); g && g->points < 1)
    config_error("features.m must be >= 1");

  cfg.schedule = require(doc, "schedule");
  validate_schedule_shape(cfg.schedule, cfg.dimension);

  cfg.ridge.lambda = as_number(require(require(doc, "ridge"), "lambda"), "ridge.lambda");
  user_input("ridge", [&] { cfg.ridge.validate(); return 0; });

  const json& stop = require(doc, "stopping");
  cfg.stopping.max_steps = as_count(require(stop, "max_steps"), "stopping.max_steps");
  cfg.stopping.frob_tol = as_number(require(stop, "frob_tol"), "stopping.frob_tol");
  user_input("stopping", [&] { cfg.stopping.validate(); return 0; });

  if (doc.contains("initial")) cfg.initial = as_matrix(doc.at("initial"), cfg.dimension, cfg.dimension, "initial");
  if (doc.contains("task")) cfg.task = as_matrix(doc.at("task"), cfg.dimension, cfg.dimension, "task");
  if (doc.contains("nuisance_basis"))
    cfg.nuisance_basis = as_vector_list(doc.at("nuisance_basis"), cfg.dimension, "nuisance_basis");
  if (doc.contains("outputs")) {
    if (!doc.at("outputs").is_string()) config_error("outputs must be a string");
    cfg.outputs = doc.at("outputs").get<std::string>();
  }
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(detail::read_json(path), path.parent_path().empty() ? "." : path.parent_path());
}

inline TiltedDemoConfig parse_demo_config(const json& doc) {
  using namespace detail;
  if (!doc.is_object()) config_error("config must be a JSON object");
  TiltedDemoConfig cfg;
  cfg.c = as_number(require(doc, "c"), "c");
  if (!(cfg.c > 0.0 && cfg.c < 1.0)) config_error("c must lie in (0, 1)");
  cfg.alpha = as_number(require(doc, "alpha"), "alpha");
  if (!(cfg.alpha > 0.0)) config_error("alpha must be > 0");
  const json& ns = require(doc, "n_list");
  if (!ns.is_array() || ns.empty()) config_error("n_list must be a nonempty array");
  for (const json& n : ns) {
    if (n.is_string() && (n == "inf" || n == "infinity" || n == "∞")) {
      cfg.n_list.emplace_back(std::nullopt);
    } else {
      const long k = as_count(n, "n_list entry");
      if (k < 0) config_error("n_list entries must be >= 0");
      cfg.n_list.emplace_back(k);
    }
  }
  cfg.points = as_count(require(doc, "m"), "m");
  if (cfg.points < 1) config_error("m must be >= 1");
  if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
  cfg.lambda = as_number(require(doc, "lambda"), "lambda");
  if (!(cfg.lambda > 0.0)) config_error("lambda must be > 0");
  if (doc.contains("outputs")) cfg.outputs = doc.at("outputs").get<std::string>();
  return cfg;
}

inline TiltedDemoConfig load_demo_config(const std::filesystem::path& path) {
  return parse_demo_config(detail::read_json(path));
}

}  // namespace shortkern::app
