#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace oasis {

// All sampling goes through a 64-bit Mersenne Twister plus the helpers below,
// which avoid the implementation-defined std::*_distribution algorithms so
// traces are identical across standard libraries.
using Rng = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n), n > 0. Rejection sampling, no modulo bias.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Index drawn from unnormalised nonnegative masses by inverse CDF.
// The last index with positive mass absorbs any rounding slack.
inline std::size_t categorical(Rng& rng, std::span<const double> masses, double total) {
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < masses.size(); ++k) {
    if (masses[k] <= 0.0) continue;
    last_positive = k;
    acc += masses[k];
    if (u < acc) return k;
  }
  return last_positive;
}

// Derives an independent stream seed from a base seed and a stream tag.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace oasis
