#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace panolayout {

// One round of splitmix64; used to derive substream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic random source. The engine (mt19937_64) has a sequence pinned
// by the C++ standard, and every distribution here is hand-rolled, so a given
// seed produces the same draws on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : base_seed_(seed), engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in {0, ..., n-1}, unbiased.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; caches the second value of the pair.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  // Independent substream. Derived from the original seed (not the current
  // state), so fork(i) is a pure function of (seed, i) regardless of how many
  // draws were taken in between.
  Rng fork(std::uint64_t stream) const {
    std::uint64_t s = base_seed_ ^ 0x6a09e667f3bcc909ull;
    splitmix64(s);
    s ^= stream * 0x9e3779b97f4a7c15ull + 0x0123456789abcdefull;
    splitmix64(s);
    return Rng(splitmix64(s));
  }

 private:
  std::uint64_t base_seed_;
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace panolayout
