#pragma once

#include <cstdint>
#include <random>

namespace fmeac {

// All stochastic code takes an explicit engine so runs are reproducible from a seed.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

// Derive an independent stream for a sub-component without consuming the parent.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>{lo, hi}(rng);
}

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>{0.0, 1.0}(rng); }

}  // namespace fmeac
