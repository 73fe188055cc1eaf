#pragma once

// The `demo-tilted` pipeline: KRR decision boundaries on tilted-label data as
// the nuisance coordinate u is shorted away.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "experiment.hpp"
#include "report.hpp"
#include "shortkern/shortkern.hpp"

namespace shortkern::app {

/// f_n(s, u) = a s + b u + d, recovered from probe evaluations.
struct Boundary {
  std::optional<long> n;  // nullopt is n = infinity
  double a = 0.0;
  double b = 0.0;
  double d = 0.0;

  /// Angle of the line a s + b u + d = 0 against the s-axis, in [0, 180); 90 is vertical.
  double angle_deg() const {
    double deg = std::atan2(a, -b) * 180.0 / std::numbers::pi;
    if (deg < 0.0) deg += 180.0;
    if (deg >= 180.0) deg -= 180.0;
    return deg;
  }
  double slope_ratio() const { return std::abs(b / a); }
  std::string label() const { return n ? std::to_string(*n) : "inf"; }
};

struct DemoResult {
  Problem problem;
  std::vector<Boundary> boundaries;
};

/// R_n = diag(1, (1-c)^n) from shorting u with scale c; infinity is diag(1, 0).
inline std::vector<PsdOperator> tilted_operators(const TiltedDemoConfig& cfg) {
  long last = 0;
  for (const auto& n : cfg.n_list)
    if (n) last = std::max(last, *n);
  const SubspaceSpec nuisance(2, {Vector::Unit(2, 1)});
  Trajectory traj;
  if (last > 0) {
    traj = run_trajectory(PsdOperator::identity(2), EffectSchedule::constant_projection(nuisance, cfg.c),
                          {last, std::numeric_limits<double>::min()});
  } else {
    traj.operators.push_back(PsdOperator::identity(2));
  }
  std::vector<PsdOperator> out;
  for (const auto& n : cfg.n_list) {
    if (!n) {
      out.push_back(complement_projection(nuisance));
    } else {
      // A trajectory that reached its fixed point early stays there.
      out.push_back(traj.operators[static_cast<std::size_t>(std::min(*n, traj.steps()))]);
    }
  }
  return out;
}

inline Boundary fit_boundary(const Problem& prob, const PsdOperator& r, double lambda) {
  const Vector c = krr_fit(gram_operator(prob.features, r), prob.labels, {lambda});
  const Predictor f(prob.features, r, c);
  const auto at = [&](double s, double u) {
    Matrix probe(2, 1);
    probe << s, u;
    return krr_predict(f, probe)(0);
  };
  Boundary out;
  out.d = at(0.0, 0.0);
  out.a = at(1.0, 0.0) - out.d;
  out.b = at(0.0, 1.0) - out.d;
  if (std::abs(out.a) < 1e-12 && std::abs(out.b) < 1e-12)
    throw Error(ErrorCode::DegenerateFit, "predictor is constant; no decision boundary");
  return out;
}

inline DemoResult fit_tilted_boundaries(const TiltedDemoConfig& cfg) {
  SplitMix64 rng(cfg.seed);
  DemoResult out{tilted_plane_problem(rng, cfg.points, cfg.alpha), {}};
  const std::vector<PsdOperator> ops = tilted_operators(cfg);
  for (std::size_t i = 0; i < ops.size(); ++i) {
    Boundary b = fit_boundary(out.problem, ops[i], cfg.lambda);
    b.n = cfg.n_list[i];
    out.boundaries.push_back(b);
  }
  return out;
}

namespace detail {

/// Segment of a s + b u + d = 0 inside [-1,1]^2; degenerate when the line misses the box.
inline std::pair<Vector, Vector> clip_to_box(const Boundary& line) {
  std::vector<Vector> hits;
  const auto add = [&](double s, double u) {
    if (s < -1.0 - 1e-12 || s > 1.0 + 1e-12 || u < -1.0 - 1e-12 || u > 1.0 + 1e-12) return;
    Vector p(2);
    p << std::clamp(s, -1.0, 1.0), std::clamp(u, -1.0, 1.0);
    hits.push_back(p);
  };
  for (double edge : {-1.0, 1.0}) {
    if (line.b != 0.0) add(edge, -(line.a * edge + line.d) / line.b);
    if (line.a != 0.0) add(-(line.b * edge + line.d) / line.a, edge);
  }
  if (hits.empty()) return {Vector::Zero(2), Vector::Zero(2)};
  std::pair<Vector, Vector> best{hits.front(), hits.front()};
  double widest = 0.0;
  for (const Vector& p : hits) {
    for (const Vector& q : hits) {
      if ((p - q).norm() > widest) {
        widest = (p - q).norm();
        best = {p, q};
      }
    }
  }
  return best;
}

}  // namespace detail

inline std::string demo_svg(const DemoResult& demo) {
  constexpr double kSize = 440.0;
  constexpr double kMargin = 20.0;
  constexpr double kHalf = (kSize - 2.0 * kMargin) / 2.0;
  const auto px = [&](double s) { return format_double(kMargin + (s + 1.0) * kHalf); };
  const auto py = [&](double u) { return format_double(kMargin + (1.0 - u) * kHalf); };
  static constexpr const char* kLineColors[] = {"#2ca02c", "#ff7f0e", "#9467bd", "#000000", "#8c564b", "#e377c2"};

  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize + 120.0 << "\" height=\"" << kSize
     << "\" viewBox=\"0 0 " << kSize + 120.0 << ' ' << kSize << "\">\n"
     << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << 2.0 * kHalf << "\" height=\""
     << 2.0 * kHalf << "\" fill=\"none\" stroke=\"#444444\"/>\n";
  const FeatureMap& v = demo.problem.features;
  for (long i = 0; i < v.size(); ++i) {
    const double y = demo.problem.labels.values()(i, 0);
    const char* fill = y > 0 ? "#d62728" : (y < 0 ? "#1f77b4" : "#7f7f7f");
    os << "<circle cx=\"" << px(v.at(i)(0, 0)) << "\" cy=\"" << py(v.at(i)(1, 0)) << "\" r=\"2.5\" fill=\"" << fill
       << "\"/>\n";
  }
  for (std::size_t k = 0; k < demo.boundaries.size(); ++k) {
    const Boundary& b = demo.boundaries[k];
    const auto [p, q] = detail::clip_to_box(b);
    const char* color = kLineColors[k % std::size(kLineColors)];
    os << "<line x1=\"" << px(p(0)) << "\" y1=\"" << py(p(1)) << "\" x2=\"" << px(q(0)) << "\" y2=\"" << py(q(1))
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kSize << "\" y=\"" << kMargin + 16.0 * static_cast<double>(k + 1) << "\" fill=\"" << color
       << "\" font-size=\"12\">n = " << b.label() << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline DemoResult run_tilted_demo(const TiltedDemoConfig& cfg, const std::filesystem::path& out_dir) {
  DemoResult demo = fit_tilted_boundaries(cfg);
  prepare_output_dir(out_dir, true);
  {
    CsvWriter csv((out_dir / "boundaries.csv").string());
    csv.header({"n", "a", "b", "d", "boundary_angle_deg"});
    for (const Boundary& b : demo.boundaries)
      csv.row({b.label(), format_double(b.a), format_double(b.b), format_double(b.d), format_double(b.angle_deg())});
  }
  std::ofstream(out_dir / "demo.svg", std::ios::binary | std::ios::trunc) << demo_svg(demo);

  json rows = json::array();
  for (const Boundary& b : demo.boundaries)
    rows.push_back({{"n", b.label()}, {"slope_ratio", b.slope_ratio()}, {"angle_deg", b.angle_deg()}});
  const json out = {{"c", cfg.c},         {"alpha", cfg.alpha}, {"lambda", cfg.lambda}, {"m", cfg.points},
                    {"seed", cfg.seed},   {"generator", SplitMix64::kAlgorithm},        {"boundaries", rows}};
  std::ofstream(out_dir / "summary.json", std::ios::binary | std::ios::trunc) << out.dump(2) << '\n';
  return demo;
}

}  // namespace shortkern::app
