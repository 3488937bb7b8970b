// Seedable random streams with fixed transforms, so every simulation output
// is reproducible from (seed, stream indices) alone.
//
// The engine is std::mt19937_64 (fully specified by the standard). The
// variate transforms are implemented here rather than taken from
// <random>'s distributions, whose algorithms are implementation-defined:
//   uniform01    (x >> 11) * 2^-53, in [0, 1)
//   exponential  -log1p(-u), inverse CDF of Exp(1)
//   normal       Box-Muller, pair cached
//   below(n)     rejection sampling, exactly uniform on {0, ..., n-1}
// Stream derivation uses the SplitMix64 finalizer to mix seed and indices.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace symscatter {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent child stream for (seed, a, b), e.g. per replication.
  static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return Rng(mix(mix(mix(seed) ^ a) ^ b));
  }

  std::uint64_t next_u64() { return engine_(); }

  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double exponential() { return -std::log1p(-uniform01()); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  // Uniform on {0, ..., bound-1}, unbiased.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % bound;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace symscatter
