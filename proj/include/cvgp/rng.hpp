// Deterministic stream derivation: every random decision in the engine draws
// from an mt19937_64 seeded by hashing (master seed, stream labels), so
// results are independent of thread scheduling.
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cvgp {

using Rng = std::mt19937_64;

constexpr uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix_seed(std::initializer_list<uint64_t> words) {
  uint64_t h = 0x8000000000000001ULL;
  for (uint64_t w : words) h = splitmix64(h ^ splitmix64(w));
  return h;
}

inline Rng make_rng(std::initializer_list<uint64_t> words) {
  return Rng(mix_seed(words));
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Uniform in [0,1).
inline double unit(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace cvgp
