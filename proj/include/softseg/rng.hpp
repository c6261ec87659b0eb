#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace softseg {

// Seeded generator used everywhere randomness is needed: std::mt19937_64,
// seeded through SplitMix64 so that each named purpose ("init", "augment",
// "batch", ...) gets an independent stream from the same user seed.
// Uniform and normal draws are computed here rather than with the
// <random> distributions, whose algorithms differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream for `purpose`, derived from `seed`.
  static Rng stream(std::uint64_t seed, std::string_view purpose);
  // Child stream, e.g. one per case or per image.
  Rng split(std::uint64_t index) const;

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal (Box-Muller, one value per call).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace softseg
