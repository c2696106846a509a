#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace fbmbt {

/// Weyl increment of SplitMix64 (2^64 / golden ratio).
inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// Offset between consecutive named streams derived from one seed.
/// Stream k of seed s is keyed by mix64(s + k * kStreamStride).
inline constexpr std::uint64_t kStreamStride = 0xD1B54A32D192ED03ULL;

/// Stream indices used across the toolkit.
namespace streams {
inline constexpr std::uint64_t kFbmComponent1 = 1;
inline constexpr std::uint64_t kFbmComponent2 = 2;
inline constexpr std::uint64_t kWalk = 3;
inline constexpr std::uint64_t kBrownian1 = 4;  // B^1..B^4 use 4..7
inline constexpr std::uint64_t kTimeChange = 8;
inline constexpr std::uint64_t kCorrectionFbm = 9;  // components use 9 and 10
inline constexpr std::uint64_t kInstance = 11;      // randomized test parameters
inline constexpr std::uint64_t kAuxiliary = 12;     // master seed of companion samples
}  // namespace streams

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(seed + stream * kStreamStride);
}

/// Seed of replication `index` under `master_seed`.
constexpr std::uint64_t replication_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
  return mix64(master_seed ^ (kGoldenGamma * index));
}

/// Counter-based generator: draw i is mix64(key + i * gamma). Copies are
/// independent cursors over the same stream.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGoldenGamma);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the sine branch is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Standard normal number `index` of the stream, independent of the cursor.
  double normal_at(std::uint64_t index) const noexcept {
    const double u1 = (static_cast<double>(mix64(key_ + (2 * index + 1) * kGoldenGamma) >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(mix64(key_ + (2 * index + 2) * kGoldenGamma) >> 11) + 0.5) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fbmbt
