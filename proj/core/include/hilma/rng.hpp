#pragma once

#include <cstdint>
#include <random>

namespace hilma {

// splitmix64: used to derive independent, reproducible sub-stream seeds from
// (seed, index) pairs. Replications and Monte Carlo draws each get their own
// stream, so results do not depend on scheduling order or thread count.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s ^= index * 0x9e3779b97f4a7c15ULL + 0x7f4a7c15ULL;
  std::uint64_t b = splitmix64(s);
  return a ^ (b + 0x632be59bd9b4e019ULL + (index << 1));
}

// Deterministic sampler. All variates are produced by inversion from 53-bit
// uniforms, so sequences are identical across platforms and standard-library
// implementations for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // uniform on (0, 1): never returns 0 or 1, safe for log/inversion
  double uniform() {
    const std::uint64_t bits = engine_() >> 11;  // 53 bits
    return (static_cast<double>(bits) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal(double mean = 0.0, double sd = 1.0);  // inverse-CDF

  double exponential(double mean) { return -mean * std::log(uniform()); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hilma
