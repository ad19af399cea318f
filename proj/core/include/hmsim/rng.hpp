#pragma once

// Portable random helpers on top of std::mt19937_64. The standard
// distributions are implementation-defined, so integer and real draws are
// mapped by hand to keep streams identical across standard libraries.

#include <cstdint>
#include <random>

namespace hmsim {

using Rng = std::mt19937_64;

// Uniform integer in [0, bound). bound must be > 0.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  // Rejection on the top of the range removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace hmsim
