#pragma once

#include <cstdint>
#include <random>

#include "gassm/special.hpp"

// Reproducible sampling.  Only the mt19937_64 bit stream is consumed; all
// transforms (uniform mapping, inverse-cdf normal) are our own so results are
// identical across standard libraries and platforms.

namespace gassm {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent substream seed for replication index i of a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t i) {
  return splitmix64(base ^ splitmix64(i + 1));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on the open interval (0,1); 53-bit resolution, never 0 or 1.
  double uniform() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() { return norm_quantile(uniform()); }

  // P(1) = p
  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  double exponential() { return -std::log(uniform()); }

  std::uint64_t bits() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace gassm
