#include "pdmp/rng.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace pdmp {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t key, std::uint64_t counter) {
  std::array<std::uint32_t, 8> words{};
  std::uint64_t s = splitmix64(key) ^ splitmix64(counter + 0x632be59bd9b4e019ULL);
  for (std::size_t i = 0; i < words.size(); i += 2) {
    s = splitmix64(s);
    words[i] = static_cast<std::uint32_t>(s);
    words[i + 1] = static_cast<std::uint32_t>(s >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : engine_(seeded_engine(seed, ~std::uint64_t{0})) {}

Rng Rng::for_stream(std::uint64_t seed, std::uint64_t stream) {
  Rng r;
  r.engine_ = seeded_engine(seed, stream);
  return r;
}

double Rng::uniform() {
  // 53 random mantissa bits, shifted off zero by half a ulp.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::exponential(double rate) { return -std::log(uniform()) / rate; }

double Rng::normal(double mean, double sd) {
  // Box-Muller; one value per call keeps the stream layout simple.
  const double u1 = uniform();
  const double u2 = uniform();
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace pdmp
