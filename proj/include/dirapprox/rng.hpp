#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace dirapprox {

/// Counter-based Philox4x32-10 stream. The key is the user seed and the upper
/// half of the counter is the stream id, so distinct stream ids never overlap
/// and any (seed, stream) pair can be recreated without replaying others.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : seed_(seed), stream_(stream_id) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    if (lane_ >= 2) refill();
    const std::uint64_t out =
        (static_cast<std::uint64_t>(block_[2 * lane_]) << 32) | block_[2 * lane_ + 1];
    ++lane_;
    return out;
  }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

  /// Child stream for work item `item` of this stream. Derived ids are mixed
  /// so that nested splitting does not collide with sibling streams.
  RngStream split(std::uint64_t item) const noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int lane_ = 2;
};

}  // namespace dirapprox
