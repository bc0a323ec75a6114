#pragma once

#include <cstdint>
#include <random>

namespace pdmp {

/// 64-bit Mersenne twister with helpers for the draws the simulators need.
///
/// Independent streams are derived from a (seed, stream index) pair by hashing
/// the counter through splitmix64, so ensemble paths are reproducible
/// regardless of how they are scheduled across threads.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  static Rng for_stream(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Exponential with the given rate (mean 1/rate).
  double exponential(double rate = 1.0);
  double normal(double mean = 0.0, double sd = 1.0);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace pdmp
