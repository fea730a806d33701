#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al. 2011). A
// stream is identified by a 64-bit key plus a 64-bit stream id, so any
// (seed, replication) pair gets its own reproducible sequence regardless of
// scheduling order.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace scband {

/// SplitMix64 finalizer; used to derive independent keys from a seed.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t key) noexcept
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  Block operator()(std::uint64_t hi, std::uint64_t lo) const noexcept {
    Block ctr{static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(lo >> 32),
              static_cast<std::uint32_t>(hi), static_cast<std::uint32_t>(hi >> 32)};
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      ctr = round_fn(ctr, key);
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Block round_fn(const Block& c, const std::array<std::uint32_t, 2>& k) noexcept {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
            static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
  }

  std::array<std::uint32_t, 2> key_;
};

/// Sequential draws from one Philox stream. Each block of 128 bits yields
/// two doubles in (0,1).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : philox_(seed), stream_(stream_id) {}

  /// Uniform on the open interval (0,1) with 53-bit resolution.
  double uniform() noexcept {
    if (cached_ == 0) refill();
    return buffer_[2 - cached_--];
  }

  /// Box-Muller; consumes exactly two uniforms per normal.
  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer on {lo, ..., hi}.
  long long uniform_int(long long lo, long long hi) noexcept {
    const auto width = static_cast<double>(hi - lo + 1);
    auto k = static_cast<long long>(std::floor(uniform() * width));
    if (k > hi - lo) k = hi - lo;
    return lo + k;
  }

 private:
  static double to_unit(std::uint32_t a, std::uint32_t b) noexcept {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(a) << 32) | b) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  void refill() noexcept {
    const auto block = philox_(stream_, counter_++);
    buffer_[0] = to_unit(block[0], block[1]);
    buffer_[1] = to_unit(block[2], block[3]);
    cached_ = 2;
  }

  Philox4x32 philox_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<double, 2> buffer_{};
  int cached_ = 0;
};

/// Mean-zero, unit-variance laws used for scores and measurement errors.
enum class ScoreDistribution { Normal01, UniformSym, LaplaceStd };

inline double draw(ScoreDistribution dist, RandomStream& rng) noexcept {
  switch (dist) {
    case ScoreDistribution::Normal01:
      return rng.normal();
    case ScoreDistribution::UniformSym:
      return std::numbers::sqrt3 * (2.0 * rng.uniform() - 1.0);
    case ScoreDistribution::LaplaceStd: {
      // density 2^{-1/2} exp(-sqrt2 |x|), scale 1/sqrt2
      const double u = rng.uniform() - 0.5;
      const double mag = -std::log1p(-2.0 * std::abs(u)) / std::numbers::sqrt2;
      return u < 0.0 ? -mag : mag;
    }
  }
  return 0.0;
}

}  // namespace scband
