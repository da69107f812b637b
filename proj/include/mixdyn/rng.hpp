#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mixdyn {

/// SplitMix64 (Steele, Lea, Flood 2014): 64-bit state, increment
/// 0x9e3779b97f4a7c15, output mix with multipliers 0xbf58476d1ce4e5b9 and
/// 0x94d049bb133111eb. Portable and fully specified, so a seed reproduces the
/// same stream in any implementation.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) from the top 53 bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal by Box-Muller. Each call consumes exactly two uniforms
  /// and returns the cosine branch.
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace mixdyn
