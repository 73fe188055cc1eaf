#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "checks.hpp"
#include "config.hpp"
#include "demo.hpp"
#include "experiment.hpp"
#include "report.hpp"

namespace {

using namespace shortkern;
using namespace shortkern::app;

constexpr int kExitOk = 0;
constexpr int kExitViolation = 2;
constexpr int kExitConfig = 64;
constexpr int kExitNumerical = 65;

std::filesystem::path output_dir(const std::string& flag, const std::filesystem::path& from_config) {
  return flag.empty() ? from_config : std::filesystem::path(flag);
}

int exit_code_for(const Error& e) {
  return e.code() == ErrorCode::ConfigError ? kExitConfig : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shorting dynamics on positive operators, induced kernels and ridge paths"};
  app.require_subcommand(1);

  std::string out_flag;
  bool force = false;
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string filter;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out_flag, "Output directory (overrides config \"outputs\")");
    sub->add_flag("--force", force, "Replace an existing output directory");
    sub->add_option("--seed", seed, "Random seed (overrides config)");
  };
  CLI::App* run = app.add_subcommand("run", "Run a trajectory / KRR / energy experiment");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  add_common(run);
  CLI::App* demo = app.add_subcommand("demo-tilted", "Decision boundaries on tilted-label data");
  demo->add_option("config", config_path, "Demo config (JSON)")->required();
  add_common(demo);
  CLI::App* check = app.add_subcommand("check", "Run the seeded property suites");
  check->add_option("--filter", filter, "Only suites whose name contains NAME");
  check->add_option("--seed", seed, "Base seed for the suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (check->parsed()) return run_checks(filter, std::cout, seed.value_or(0)) ? kExitOk : 1;

    if (run->parsed()) {
      ExperimentConfig cfg = load_experiment_config(config_path);
      if (seed) cfg.seed = *seed;
      const std::filesystem::path dir = output_dir(out_flag, cfg.outputs);
      prepare_output_dir(dir, force);
      const ExperimentSummary sum = run_experiment(cfg, dir);
      std::cout << "steps=" << sum.steps << " converged=" << (sum.converged ? "true" : "false")
                << " max_telescoping_error=" << format_double(sum.max_telescoping_error)
                << " max_path_identity_residual=" << format_double(sum.max_path_error) << '\n';
      return sum.ok() ? kExitOk : kExitViolation;
    }

    TiltedDemoConfig cfg = load_demo_config(config_path);
    if (seed) cfg.seed = *seed;
    const std::filesystem::path dir = output_dir(out_flag, cfg.outputs);
    prepare_output_dir(dir, force);
    for (const Boundary& b : run_tilted_demo(cfg, dir).boundaries)
      std::cout << "n=" << b.label() << " |b/a|=" << format_double(b.slope_ratio())
                << " angle_deg=" << format_double(b.angle_deg()) << '\n';
    return kExitOk;
  } catch (const Error& e) {
    log(LogLevel::Error, e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    log(LogLevel::Error, e.what());
    return kExitNumerical;
  }
}
