#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace relatent {

/// Deterministic random stream. All sampling goes through explicit
/// arithmetic on the raw 64-bit engine output, so two builds of this
/// library produce bit-identical streams for the same seed, independent
/// of the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, unbiased.
  std::uint64_t uniform_int(std::uint64_t n);

  /// Standard normal via Box-Muller; the paired value is cached.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Derives an independent stream from this seed and a key tuple.
  static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                    std::uint64_t c = 0);

  /// Engine + cache state round-trip, used for training resume.
  std::string serialize() const;
  static Rng deserialize(const std::string& text);

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

/// splitmix64 finalizer; mixes keys into derived seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace relatent
