#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Core>

namespace shortkern {

/// SplitMix64 (Steele, Lea & Flood). Chosen because it is fully specified in
/// a few lines, so any implementation can reproduce a sample from a seed.
///
///   state += 0x9e3779b97f4a7c15
///   z = state
///   z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
///   z = (z ^ (z >> 27)) * 0x94d049bb133111eb
///   return z ^ (z >> 31)
///
/// uniform01() = (next() >> 11) * 2^-53. gaussian() is Box-Muller on two
/// consecutive uniforms u1, u2: sqrt(-2 ln(1 - u1)) * cos(2 pi u2); the sine
/// branch is discarded so every call consumes exactly two draws.
class SplitMix64 {
 public:
  static constexpr const char* kAlgorithm = "splitmix64";

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double gaussian() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Eigen::MatrixXd gaussian_matrix(long rows, long cols) {
    Eigen::MatrixXd m(rows, cols);
    for (long i = 0; i < rows; ++i)
      for (long j = 0; j < cols; ++j) m(i, j) = gaussian();
    return m;
  }

  Eigen::VectorXd gaussian_vector(long n) {
    Eigen::VectorXd v(n);
    for (long i = 0; i < n; ++i) v(i) = gaussian();
    return v;
  }

  Eigen::VectorXd unit_vector(long n) {
    Eigen::VectorXd v = gaussian_vector(n);
    while (v.norm() == 0.0) v = gaussian_vector(n);
    return v / v.norm();
  }

 private:
  std::uint64_t state_;
};

}  // namespace shortkern
