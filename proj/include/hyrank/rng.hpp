#pragma once

#include <cmath>
#include <cstdint>

namespace hyrank {

/// SplitMix64 (Steele, Lea & Flood). One 64-bit word of state, identical
/// output on every platform. All randomness in the project flows through
/// this generator so runs replay bit-for-bit from a seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform index in [0, n). Modulo reduction; the bias is below 2^-53
  /// for any n this project draws from.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller. Two uniforms per draw, no cached
  /// second value, so the stream position is a pure function of the
  /// number of calls.
  double gaussian() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::uint64_t state_;
};

/// Deterministic sub-seed derivation, used to give each tensor, epoch and
/// split its own independent stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  Rng g(base ^ (0x9E3779B97F4A7C15ull * (salt + 1)));
  return g.next_u64();
}

}  // namespace hyrank
