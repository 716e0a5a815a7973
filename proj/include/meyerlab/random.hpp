#pragma once

#include <cstdint>
#include <random>

namespace meyerlab {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream); parallel loops give each
/// chunk its own stream so results do not depend on the worker count.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x6d65796eu};
  return Rng(seq);
}

/// Uniform on [0, 1) from the top 53 bits; identical on every standard library.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

}  // namespace meyerlab
