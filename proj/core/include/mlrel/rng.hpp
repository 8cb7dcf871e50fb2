#pragma once

#include <cstdint>
#include <random>

namespace mlrel {

/// Reproducible random stream identified by a (seed, stream id) pair.
///
/// Distinct pairs are seeded through std::seed_seq so their sequences are
/// statistically independent; equal pairs replay the same sequence on every
/// platform because both std::seed_seq and std::mt19937_64 are fully
/// specified by the standard. The uniform mapping below is done by hand for
/// the same reason (std::uniform_real_distribution is implementation-defined).
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Uniform draw on the open interval (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform draw on [lo, hi].
  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform_open();
  }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t next_u64() noexcept { return engine_(); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

/// Stream ids used across the library. Packing a purpose tag, a level and a
/// batch counter keeps every consumer on its own stream for a given seed.
enum class StreamPurpose : std::uint64_t {
  kGenerator = 1,
  kPilot = 2,
  kLevel = 3,
  kSimulate = 4,
  kMonteCarloPilot = 5,
  kTest = 15,
};

constexpr std::uint64_t make_stream_id(StreamPurpose purpose, std::uint64_t level,
                                       std::uint64_t batch) noexcept {
  return (static_cast<std::uint64_t>(purpose) << 56) | ((level & 0xFFFF) << 40) |
         (batch & 0xFF'FFFF'FFFFull);
}

}  // namespace mlrel
