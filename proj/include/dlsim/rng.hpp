#pragma once

#include <cstdint>

namespace dlsim {

/// Counter-based SplitMix64. The n-th draw is a pure function of (seed, n),
/// so streams are reproducible on every platform and can be split by
/// deriving independent seeds with `derive`.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Seed for an independent sub-stream keyed by `key`.
  static constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t key) noexcept {
    return mix(seed ^ mix(key + 0x9E3779B97F4A7C15ULL));
  }

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix(seed_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double next_unit() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [-1, 1).
  double next_signed() noexcept { return 2.0 * next_unit() - 1.0; }

  /// Standard normal via Box-Muller (one value per call, the pair's sine half is dropped).
  double next_normal() noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace dlsim
