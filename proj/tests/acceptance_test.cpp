// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "checks.hpp"
#include "demo.hpp"
#include "experiment.hpp"
#include "instances.hpp"
#include "shortkern/shortkern.hpp"

namespace {

using namespace shortkern;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double x, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

// Independent dense oracles on raw Eigen.

double oracle_min_eig(const Matrix& a) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

double oracle_max_eig(const Matrix& a) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

Matrix oracle_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

/// Projection onto span(basis) by Householder QR.
Matrix oracle_projection(const Matrix& basis) {
  Eigen::HouseholderQR<Matrix> qr(basis);
  const Matrix q = Matrix(qr.householderQ()).leftCols(basis.cols());
  return q * q.transpose();
}

Matrix basis_matrix(const SubspaceSpec& u) {
  Matrix b(u.ambient_dim(), u.rank());
  for (long k = 0; k < u.rank(); ++k) b.col(k) = u.basis_vector(k);
  return b;
}

Matrix oracle_gram(const FeatureMap& v, const Matrix& r) { return v.stacked().transpose() * r * v.stacked(); }

const std::vector<app::TrajectoryCase>& mixed_cases() {
  static const std::vector<app::TrajectoryCase> cases = app::mixed_trajectories(20240101, 50, 20, 40);
  return cases;
}

Outcome monotonicity() {
  const auto t0 = Clock::now();
  const auto cases = app::mixed_trajectories(20240101, 50, 20, 40);
  double worst_r = 0.0, worst_g = 0.0;
  long steps = 0;
  for (const auto& [v, traj] : cases) {
    for (long m = 0; m < traj.steps(); ++m, ++steps) {
      const Matrix& r0 = traj.operators[static_cast<std::size_t>(m)].matrix();
      const Matrix& r1 = traj.operators[static_cast<std::size_t>(m + 1)].matrix();
      worst_r = std::min(worst_r, oracle_min_eig(r0 - r1));
      worst_g = std::min(worst_g, oracle_min_eig(oracle_gram(v, r0) - oracle_gram(v, r1)));
    }
  }
  const double elapsed = seconds_since(t0);
  const bool pass = worst_r >= -1e-10 && worst_g >= -1e-10 && elapsed < 10.0 && steps > 0;
  return {pass, std::to_string(cases.size()) + " trajectories, " + std::to_string(steps) +
                    " steps; min eig R_n-R_{n+1} " + num(worst_r) + ", G_n-G_{n+1} " + num(worst_g) + "; " +
                    num(elapsed) + " s"};
}

Outcome telescoping() {
  double worst_lib = 0.0, worst_r = 0.0, worst_g = 0.0;
  for (const auto& [v, traj] : mixed_cases()) {
    worst_lib = std::max(worst_lib, telescoping_error(traj));
    Matrix gap_r = traj.initial().matrix() - traj.last().matrix();
    Matrix gap_g = oracle_gram(v, traj.initial().matrix()) - oracle_gram(v, traj.last().matrix());
    for (long m = 0; m < traj.steps(); ++m) {
      const auto i = static_cast<std::size_t>(m);
      const Matrix s = oracle_sqrt(traj.operators[i].matrix());
      const Matrix d = s * traj.effects_used[i].matrix() * s;
      gap_r -= d;
      gap_g -= gram_increment(v, traj.operators[i], traj.effects_used[i]).matrix();
    }
    worst_r = std::max(worst_r, gap_r.norm());
    worst_g = std::max(worst_g, gap_g.norm());
  }
  const bool pass = worst_lib <= 1e-9 && worst_r <= 1e-9 && worst_g <= 1e-9;
  return {pass, "operator " + num(worst_lib) + " (oracle increments " + num(worst_r) + "), Gram " + num(worst_g)};
}

Outcome closed_form() {
  SplitMix64 rng(77);
  double worst = 0.0;
  int runs = 0;
  for (double c : {0.1, 0.5, 0.9}) {
    for (long n : {2L, 7L}) {
      for (bool rotated : {false, true}) {
        const Matrix q = rotated ? instances::random_orthogonal(rng, n) : Matrix::Identity(n, n);
        const Matrix basis = q.leftCols(n == 2 ? 1 : 3);
        std::vector<Vector> cols;
        for (long k = 0; k < basis.cols(); ++k) cols.push_back(basis.col(k));
        const Trajectory traj =
            run_trajectory(PsdOperator::identity(n), EffectSchedule::constant_projection(SubspaceSpec(n, cols), c),
                           {60, std::numeric_limits<double>::min()});
        const Matrix p = oracle_projection(basis);
        const Matrix perp = Matrix::Identity(n, n) - p;
        // An early stop is an exact fixed point, which then stands in for every later R_n.
        if (traj.steps() < 60 && !traj.converged) worst = std::numeric_limits<double>::infinity();
        for (long k = 0; k <= 60; ++k) {
          const Matrix expected = perp + std::pow(1.0 - c, static_cast<double>(k)) * p;
          const auto at = static_cast<std::size_t>(std::min(k, traj.steps()));
          worst = std::max(worst, (traj.operators[at].matrix() - expected).norm());
        }
        ++runs;
      }
    }
  }
  return {worst <= 1e-10, std::to_string(runs) + " runs to n = 60, max ||R_n - closed form||_F " + num(worst)};
}

Outcome limit_projection() {
  SplitMix64 rng(78);
  double worst = 0.0;
  int unconverged = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const long n = instances::uniform_index(rng, 2, 20);
    const long rank = 1 + trial % (n - 1);
    const SubspaceSpec u = instances::random_subspace(rng, n, rank);
    const Trajectory traj = run_trajectory(PsdOperator::identity(n),
                                           EffectSchedule::constant_projection(u, rng.uniform(0.2, 1.0)), {1000, 1e-12});
    if (!traj.converged) ++unconverged;
    worst = std::max(worst, (traj.last().matrix() - (Matrix::Identity(n, n) - oracle_projection(basis_matrix(u)))).norm());
  }
  return {worst <= 1e-8 && unconverged == 0,
          "20 subspaces, max ||R_N - P_perp||_F " + num(worst) + ", unconverged " + std::to_string(unconverged)};
}

Outcome maximality() {
  SplitMix64 rng(79);
  int accepted = 0, rejected = 0, oracle_agrees = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const long n = instances::uniform_index(rng, 3, 12);
    const SubspaceSpec u = instances::random_subspace(rng, n, instances::uniform_index(rng, 1, n - 1));
    const Matrix p = oracle_projection(basis_matrix(u));
    const Matrix perp = Matrix::Identity(n, n) - p;
    const Trajectory traj =
        run_trajectory(PsdOperator::identity(n), EffectSchedule::constant_projection(u, 0.7), {1000, 1e-12});
    const FeatureMap v = instances::random_features(rng, n, 1 + trial % 2, 8);
    std::vector<std::pair<long, long>> pairs;
    for (long i = 0; i < v.size(); ++i) pairs.emplace_back(i, i);
    const Matrix good = perp * instances::random_contraction(rng, n) * perp;
    if (dominance_check(v, ContractionWitness(PsdOperator::unchecked(0.5 * (good + good.transpose()))), traj.last(),
                        pairs))
      ++accepted;

    Matrix bad = 0.5 * instances::random_contraction(rng, n) + 0.5 * rng.uniform(0.01, 1.0) * p;
    bad = 0.5 * (bad + bad.transpose());
    if ((p * bad * p).norm() > 1e-3 && !loewner_leq(PsdOperator(bad), PsdOperator::unchecked(perp), 1e-10)) {
      ++rejected;
      if (oracle_min_eig(perp - bad) < -1e-10) ++oracle_agrees;
    }
  }
  return {accepted == 100 && rejected == 100 && oracle_agrees == 100,
          "dominance accepted " + std::to_string(accepted) + "/100 witnesses in U_perp; Q <= P_perp rejected " +
              std::to_string(rejected) + "/100 witnesses on U (eigen oracle agrees " + std::to_string(oracle_agrees) +
              ")"};
}

Outcome path_identity() {
  SplitMix64 rng(80);
  const auto base = app::mixed_trajectories(81, 20, 12, 15);
  constexpr double kLambdas[] = {0.01, 0.1, 1.0};
  double worst = 0.0, worst_oracle = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Trajectory& traj = base[static_cast<std::size_t>(i)].trajectory;
    const long d = 1 + i % 2;
    const long m = instances::uniform_index(rng, 2, 40);
    const FeatureMap v = instances::random_features(rng, traj.dim(), d, m);
    const Labels y(rng.gaussian_matrix(m, d));
    const double lambda = kLambdas[i % 3];
    const double scale = 1.0 + y.stacked().norm();
    const KrrPath path = krr_path(traj, v, y, {lambda});
    worst = std::max(worst, path.max_path_error() / scale);
    // Dense-inverse oracle of the same identity.
    const Matrix eye = Matrix::Identity(m * d, m * d);
    for (long k = 0; k < traj.steps(); ++k) {
      const auto j = static_cast<std::size_t>(k);
      const Matrix g0 = oracle_gram(v, traj.operators[j].matrix());
      const Matrix g1 = oracle_gram(v, traj.operators[j + 1].matrix());
      const Vector c0 = (g0 + lambda * eye).inverse() * y.stacked();
      const Vector c1 = (g1 + lambda * eye).inverse() * y.stacked();
      worst_oracle = std::max(worst_oracle, ((c1 - c0) - (g1 + lambda * eye).inverse() * (g0 - g1) * c0).norm() / scale);
    }
  }
  return {worst <= 1e-8 && worst_oracle <= 1e-8,
          "20 problems, max residual/(1+||y||) " + num(worst) + " (dense oracle " + num(worst_oracle) + ")"};
}

Outcome alignment() {
  SplitMix64 rng(82);
  double worst_align = 0.0, worst_pred = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const long n = instances::uniform_index(rng, 2, 15);
    const SubspaceSpec u = instances::random_subspace(rng, n, instances::uniform_index(rng, 1, n - 1));
    const long m = instances::uniform_index(rng, 5, 40);
    const FeatureMap v = instances::random_features(rng, n, 1, m);
    const Labels y(rng.gaussian_matrix(m, 1));
    const Trajectory traj = run_trajectory(PsdOperator::identity(n),
                                           EffectSchedule::constant_projection(u, rng.uniform(0.3, 1.0)), {1000, 1e-12});
    const KrrPath path = krr_path(traj, v, y, {0.1});
    for (long k = 0; k < u.rank(); ++k)
      worst_align = std::max(
          worst_align, std::abs(nuisance_alignment(path, v, u.basis_vector(k), PsdOperator::identity(n)).back()));
    // Direct fit with K = V^T P_perp V by a dense solve.
    const Matrix perp = Matrix::Identity(n, n) - oracle_projection(basis_matrix(u));
    const Matrix gp = oracle_gram(v, perp);
    const Vector c_direct = (gp + 0.1 * Matrix::Identity(m, m)).inverse() * y.stacked();
    const Predictor limit(v, traj.last(), path.coefficients.back());
    for (long i = 0; i < m; ++i)
      worst_pred = std::max(worst_pred, std::abs(krr_predict(limit, v.at(i))(0) - (gp * c_direct)(i)));
  }
  return {worst_align <= 1e-8 && worst_pred <= 1e-7,
          "final alignment " + num(worst_align) + ", limit vs P_perp predictor " + num(worst_pred)};
}

Outcome rkhs_monotonicity() {
  SplitMix64 rng(83);
  double worst = 0.0;
  long samples = 0;
  for (const auto& c : app::mixed_trajectories(84, 20, 12, 20)) {
    const Trajectory& traj = c.trajectory;
    for (long k = 0; k < traj.steps(); ++k) {
      const auto i = static_cast<std::size_t>(k);
      const auto u = instances::sample_in_range(rng, traj.operators[i + 1]);
      if (!u) continue;
      ++samples;
      const double before = rkhs_norm_sq(traj.operators[i], *u);
      const double after = rkhs_norm_sq(traj.operators[i + 1], *u);
      worst = std::max(worst, std::isfinite(after) ? before - after : std::numeric_limits<double>::infinity());
    }
  }
  return {worst <= 1e-8 && samples > 0,
          "20 trajectories, " + std::to_string(samples) + " samples, max norm decrease " + num(worst)};
}

struct GreedyStats {
  double top_gap = 0.0;
  double dominance_gap = 0.0;
  double ledger_gap = 0.0;
  bool nonincreasing = true;
  long steps = 0;
};

const GreedyStats& greedy_stats() {
  static const GreedyStats stats = [] {
    GreedyStats s;
    SplitMix64 rng(85);
    for (int trial = 0; trial < 10; ++trial) {
      const long n = instances::uniform_index(rng, 2, 15);
      const TaskOperator b{PsdOperator(instances::random_spd(rng, n))};
      const Trajectory traj = run_trajectory(PsdOperator::identity(n), EffectSchedule::greedy(b), {n, 1e-12});
      for (long k = 0; k < traj.steps(); ++k, ++s.steps) {
        const PsdOperator& r = traj.operators[static_cast<std::size_t>(k)];
        const Matrix root = oracle_sqrt(r.matrix());
        const Matrix bn = root * b.matrix() * root;
        const GreedyChoice g = greedy_effect(b, r);
        s.top_gap = std::max(s.top_gap, std::abs(g.drop - oracle_max_eig(bn)));
        for (int j = 0; j < 1000; ++j) {
          const Vector w = rng.unit_vector(n);
          // Rank-one drop <w, B_n w> from the oracle conjugation.
          s.dominance_gap = std::max(s.dominance_gap, w.dot(bn * w) - g.drop);
        }
      }
      const EnergyLedger ledger = energy_ledger(traj, b);
      for (std::size_t i = 0; i + 1 < ledger.energies.size(); ++i) {
        const double direct = (b.matrix() * traj.operators[i].matrix()).trace() -
                              (b.matrix() * traj.operators[i + 1].matrix()).trace();
        s.ledger_gap = std::max({s.ledger_gap, std::abs(ledger.hs_drops[i] - direct), std::abs(ledger.drops[i] - direct)});
      }
      s.nonincreasing = s.nonincreasing && ledger.nonincreasing();
    }
    return s;
  }();
  return stats;
}

Outcome greedy_optimality() {
  const GreedyStats& s = greedy_stats();
  return {s.top_gap <= 1e-9 && s.dominance_gap <= 1e-9 && s.steps > 0,
          "10 instances, " + std::to_string(s.steps) + " steps x 1000 directions; |drop - lambda_max| " +
              num(s.top_gap) + ", max random excess " + num(s.dominance_gap)};
}

Outcome energy_ledger_agreement() {
  const GreedyStats& s = greedy_stats();
  return {s.ledger_gap <= 1e-9 && s.nonincreasing,
          "max drop disagreement " + num(s.ledger_gap) + ", nonincreasing " + (s.nonincreasing ? "yes" : "no")};
}

Outcome demo_reproduction(const fs::path& work) {
  const auto t0 = Clock::now();
  app::TiltedDemoConfig cfg;
  cfg.c = 0.4;
  cfg.alpha = 1.0;
  cfg.lambda = 0.1;
  cfg.points = 200;
  cfg.seed = 2024;
  cfg.n_list = {0L, 2L, 6L, std::nullopt};
  const fs::path out = work / "demo";
  const app::DemoResult demo = app::run_tilted_demo(cfg, out);
  const double elapsed = seconds_since(t0);
  const auto& b = demo.boundaries;
  const bool decreasing = b[0].slope_ratio() > b[1].slope_ratio() && b[1].slope_ratio() > b[2].slope_ratio();
  const bool vertical = b[3].slope_ratio() <= 1e-8;
  long circles = 0, lines = 0;
  bool well_formed = true;
  try {
    boost::property_tree::ptree tree;
    boost::property_tree::read_xml((out / "demo.svg").string(), tree);
    for (const auto& [tag, node] : tree.get_child("svg")) {
      circles += tag == "circle";
      lines += tag == "line";
    }
  } catch (const std::exception&) {
    well_formed = false;
  }
  well_formed = well_formed && circles == cfg.points && lines == 4;
  return {decreasing && vertical && well_formed && elapsed < 5.0,
          "|b/a| = " + num(b[0].slope_ratio(), 8) + ", " + num(b[1].slope_ratio(), 8) + ", " + num(b[2].slope_ratio(), 8) +
              ", " + num(b[3].slope_ratio()) + " at n = 0, 2, 6, inf; svg " + (well_formed ? "ok" : "malformed") +
              "; " + num(elapsed) + " s"};
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SHORTKERN_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome cli_determinism(const fs::path& work) {
  const app::json run_cfg = {
      {"dimension", 6},
      {"output_dim", 2},
      {"seed", 31},
      {"features", {{"source", "random_gaussian"}, {"m", 25}}},
      {"schedule", {{"kind", "greedy"}}},
      {"ridge", {{"lambda", 0.1}}},
      {"stopping", {{"max_steps", 6}, {"frob_tol", 1e-12}}},
      {"nuisance_basis", {{1.0, 0.0, 0.0, 0.0, 0.0, 0.0}}}};
  const app::json demo_cfg = {{"c", 0.4}, {"alpha", 1.0}, {"n_list", {0, 2, 6, "inf"}},
                              {"m", 200}, {"seed", 7},    {"lambda", 0.1}};
  std::ofstream(work / "run.json") << run_cfg.dump();
  std::ofstream(work / "demo.json") << demo_cfg.dump();
  const fs::path log = work / "cli.log";
  int bad_exits = 0;
  for (const char* tag : {"r1", "r2"}) {
    bad_exits += run_cli("run " + (work / "run.json").string() + " --out " + (work / tag).string(), log) != 0;
    bad_exits += run_cli("demo-tilted " + (work / "demo.json").string() + " --out " + (work / ("d" + std::string(tag))).string(), log) != 0;
  }
  bool identical = true;
  for (const char* f : {"trajectory.csv", "krr_path.csv"}) {
    const std::string a = slurp(work / "r1" / f);
    identical = identical && !a.empty() && a == slurp(work / "r2" / f);
  }
  const std::string da = slurp(work / "dr1" / "boundaries.csv");
  identical = identical && !da.empty() && da == slurp(work / "dr2" / "boundaries.csv");
  const int check_exit = run_cli("check", log);
  return {identical && bad_exits == 0 && check_exit == 0,
          std::string("CSV outputs ") + (identical ? "byte-identical" : "differ") + "; `check` exit " +
              std::to_string(check_exit)};
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / ("shortkern_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"monotonicity", monotonicity},
      {"telescoping", telescoping},
      {"closed form", closed_form},
      {"limit projection", limit_projection},
      {"maximality sampling", maximality},
      {"coefficient path identity", path_identity},
      {"nuisance alignment", alignment},
      {"RKHS norm monotonicity", rkhs_monotonicity},
      {"greedy optimality", greedy_optimality},
      {"energy ledger", energy_ledger_agreement},
      {"tilted demo", [&] { return demo_reproduction(work); }},
      {"CLI determinism", [&] { return cli_determinism(work); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
  fs::remove_all(work);
  return failures == 0 ? 0 : 1;
}
