// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace cscal {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}
}  // namespace detail

/// Derives an independent stream key from (seed, salt).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  return detail::mix64(detail::mix64(seed + 0x9E3779B97F4A7C15ULL) + salt);
}

/// Counter-based generator: draw i is a pure function of (key, i), so the
/// full state is two integers and every stream is replayable from them.
struct CounterRng {
  std::uint64_t key = 0;
  std::uint64_t counter = 0;

  CounterRng() = default;
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key(derive_seed(seed, stream)) {}

  std::uint64_t next_u64() {
    return detail::mix64(key + (++counter) * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Standard normal via Box-Muller (two draws per value).
  double next_normal() {
    const double u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1 > 0.0 ? u1 : 0x1.0p-53));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Uniform integer in [0, n) via 128-bit multiply-shift.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<__uint128_t>(next_u64()) * static_cast<__uint128_t>(n)) >> 64);
  }
};

}  // namespace cscal
