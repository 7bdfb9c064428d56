#pragma once

#include <cstdint>
#include <random>

namespace hetrdme {

using Rng = std::mt19937_64;

/// Independent stream for (master seed, level, replicate).
inline Rng make_stream(std::uint64_t master, std::uint64_t level, std::uint64_t replicate) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(level), static_cast<std::uint32_t>(level >> 32),
                    static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(replicate >> 32)};
  return Rng(seq);
}

/// Uniform on [0,1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform on (0,1]; safe to take the logarithm of.
inline double uniform_open_closed(Rng& rng) { return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53; }

}  // namespace hetrdme
