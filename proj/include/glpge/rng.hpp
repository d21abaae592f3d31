#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace glpge {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based 64-bit generator: the n-th draw is mix64(key + n * golden).
///
/// Streams are derived from (key, index) pairs, so a sample's randomness only
/// depends on its own index and never on how many other samples were drawn
/// before it. Normals use Box-Muller on two consecutive uniforms.
class Rng {
 public:
  explicit Rng(std::uint64_t key = 0) : key_(mix64(key)) {}

  /// Independent child stream; same (parent key, index) gives the same stream.
  [[nodiscard]] Rng stream(std::uint64_t index) const {
    Rng r;
    r.key_ = mix64(key_ ^ mix64(index + 0x632BE59BD9B4E019ULL));
    return r;
  }

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  double normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  [[nodiscard]] std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace glpge
