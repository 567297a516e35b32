#pragma once

// Counter-based random numbers: the value at (seed, stream, index) is a pure
// function of those integers, so any partition of the work across threads
// reproduces the same draws.

#include <cmath>
#include <cstdint>
#include <limits>

namespace nvsense::random {

/// SplitMix64 finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// Key for an independent stream derived from a user seed.
[[nodiscard]] constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed ^ kGolden) + stream * kGolden);
}

/// 64 uniform bits at position `index` of the stream.
[[nodiscard]] constexpr std::uint64_t bits_at(std::uint64_t key, std::uint64_t index) noexcept {
  return mix64(key + (index + 1) * kGolden);
}

/// Uniform double in [0, 1).
[[nodiscard]] constexpr double uniform_at(std::uint64_t key, std::uint64_t index) noexcept {
  return static_cast<double>(bits_at(key, index) >> 11) * 0x1.0p-53;
}

/// Integer threshold such that bits < threshold happens with probability p.
[[nodiscard]] inline std::uint64_t bernoulli_threshold(double p) noexcept {
  if (!(p > 0.0)) return 0;
  if (p >= 1.0) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(std::ldexp(p, 64));
}

}  // namespace nvsense::random
