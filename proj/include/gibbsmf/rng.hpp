#pragma once

#include <array>
#include <cstdint>

namespace gibbsmf {

/// Counter-based random stream (Philox4x32-10) keyed by
/// (seed, iteration, mode, index).
///
/// The seed is the Philox key; iteration, mode and index are packed
/// injectively into three of the four counter words and the fourth word is
/// the block counter. Streams with distinct keys never share a counter block.
/// Limits: iteration < 2^32, mode < 2^16, index < 2^48.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t iteration, std::uint32_t mode, std::uint64_t index);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();

  std::uint64_t draws() const { return draws_; }

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int available_ = 0;
  std::uint64_t draws_ = 0;

  friend double sample_normal(RngStream& s);
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

inline constexpr std::uint64_t kMaxIteration = 0xFFFFFFFFull;
inline constexpr std::uint32_t kMaxMode = 0xFFFFu;
inline constexpr std::uint64_t kMaxIndex = (1ull << 48) - 1;

RngStream stream_for(std::uint64_t seed, std::uint64_t iteration, std::uint32_t mode,
                     std::uint64_t index);

/// Standard normal, Marsaglia polar method. The second value of each pair is
/// kept for the next call on the same stream.
double sample_normal(RngStream& s);

/// Gamma with shape a and RATE b (mean a/b). Marsaglia-Tsang, with the
/// U^(1/a) boost for a < 1. Throws std::invalid_argument unless a, b > 0.
double sample_gamma(RngStream& s, double shape, double rate);

/// Beta(a, b) via two gamma draws. Result lies strictly inside (0, 1).
double sample_beta(RngStream& s, double a, double b);

/// Throws std::invalid_argument unless 0 <= p <= 1.
int sample_bernoulli(RngStream& s, double p);

namespace detail {
/// Raw Philox4x32-10 bijection, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10_block(std::array<std::uint32_t, 4> ctr,
                                                 std::array<std::uint32_t, 2> key);
}  // namespace detail

}  // namespace gibbsmf
