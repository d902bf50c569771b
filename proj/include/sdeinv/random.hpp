#pragma once

// Counter-based random numbers and low-discrepancy sequences.
//
// Every variate is a pure function of (key, counter), so any number of
// workers can draw from the same logical stream without coordination.

#include <array>
#include <cstdint>

namespace sdeinv::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
Counter philox4x32(Counter ctr, Key key);

inline Key key_from_seed(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// Uniform on the open interval (0, 1) built from the top 52 bits of the
/// first 64-bit word of a Philox block.
double uniform_open(const Counter& block);

/// Standard normal quantile (Wichura, AS 241 PPND16); relative accuracy ~1e-16.
double normal_quantile(double p);

/// N(0,1) variate for the stream position (seed; a, b, c, d).
double normal(std::uint64_t seed, std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d);
/// U(0,1) variate for the stream position (seed; a, b, c, d).
double uniform(std::uint64_t seed, std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d);

/// Radical inverse of n in the given base (van der Corput when base = 2).
double radical_inverse(std::uint64_t n, unsigned base);

/// The d-th prime (d = 0 -> 2). Supports d < 64.
unsigned nth_prime(unsigned d);

/// Halton point n, dimension d, with a Cranley-Patterson rotation derived
/// from `seed`. Prefixes are nested: the first N points never change when a
/// larger N is requested.
double halton(std::uint64_t n, unsigned d, std::uint64_t seed);

}  // namespace sdeinv::rng
