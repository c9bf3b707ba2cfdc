#pragma once

#include <cstdint>
#include <random>

namespace mutforest {

using Rng = std::mt19937_64;

/// Disjoint stream identifiers so that different samplers never share draws.
enum class Stream : std::uint32_t {
  forest = 1,
  walk = 2,
  ct_direct = 3,
  ct_lamperti = 4,
  tau_direct = 5,
  tau_representation = 6,
  theta = 7,
  growth = 8,
  misc = 99,
};

/// Generator keyed by (seed, replicate, stream). Two calls with the same key
/// yield identical sequences, independently of how replicates are scheduled.
inline Rng make_rng(std::uint64_t seed, std::uint64_t replicate, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replicate),
                    static_cast<std::uint32_t>(replicate >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double exponential(Rng& rng, double rate) {
  return std::exponential_distribution<double>(rate)(rng);
}

}  // namespace mutforest
