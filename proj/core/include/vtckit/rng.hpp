#pragma once

// Self-contained deterministic randomness. std::shuffle and the standard
// distributions are implementation-defined, so everything that has to be
// reproducible byte-for-byte (corpus synthesis, run plans) goes through the
// generators below instead.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace vtckit::rng {

/// SplitMix64 step (Steele, Lea, Flood). Advances `state`, returns the hash.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Documented stream-seed derivation: seed of stream `k` under master seed
/// `seed` is splitmix64(seed + (k + 1) * golden_gamma). Used for per-run and
/// per-speaker seeding so every stream is individually replayable.
inline std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed + (stream + 1) * 0x9E3779B97F4A7C15ull;
  return splitmix64(s);
}

/// xoshiro256++ (Blackman & Vigna), state expanded from the seed via SplitMix64.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    for (auto& word : state_) word = splitmix64(seed);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  /// Standard normal via Box-Muller; caches the second deviate.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  /// Normal draw constrained to [lo, hi] by rejection; clamps after 10000
  /// misses (never hit for the ranges used here).
  double truncated_gaussian(double mean, double stddev, double lo, double hi) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const double v = gaussian(mean, stddev);
      if (v >= lo && v <= hi) return v;
    }
    return std::min(hi, std::max(lo, mean));
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

  /// Draws k of n indices without replacement (partial Fisher-Yates, draw order).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    if (k > n) k = n;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + below(n - i);
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace vtckit::rng
