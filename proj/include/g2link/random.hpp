// Seed derivation for reproducible, order-independent random streams.
#pragma once

#include <cstdint>
#include <random>

namespace g2link {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator for stream `stream` of master seed `seed`.
inline std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(stream + 0x5851f42d4c957f2dULL)));
}

/// Uniform double in [0, 1) that depends only on (seed, index).
inline double hash_uniform(std::uint64_t seed, std::uint64_t index) {
  return static_cast<double>(splitmix64(splitmix64(seed) ^ index) >> 11) * 0x1.0p-53;
}

}  // namespace g2link
