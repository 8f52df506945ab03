#include "gibbsmf/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace gibbsmf {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

}  // namespace

std::array<std::uint32_t, 4> detail::philox4x32_10_block(std::array<std::uint32_t, 4> ctr,
                                                         std::array<std::uint32_t, 2> key) {
  return philox4x32_10(ctr, key);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t iteration, std::uint32_t mode,
                     std::uint64_t index) {
  if (iteration > kMaxIteration || mode > kMaxMode || index > kMaxIndex) {
    throw std::invalid_argument("stream key out of range: iteration=" + std::to_string(iteration) +
                                " mode=" + std::to_string(mode) +
                                " index=" + std::to_string(index));
  }
  key_ = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  counter_ = {0u, static_cast<std::uint32_t>(iteration),
              (mode << 16) | static_cast<std::uint32_t>(index >> 32),
              static_cast<std::uint32_t>(index)};
}

void RngStream::refill() {
  block_ = philox4x32_10(counter_, key_);
  if (++counter_[0] == 0) {
    throw std::runtime_error("random stream exhausted (2^32 blocks)");
  }
  available_ = 4;
}

std::uint32_t RngStream::next_u32() {
  if (available_ == 0) refill();
  ++draws_;
  return block_[4 - available_--];
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t lo = next_u32();
  const std::uint64_t hi = next_u32();
  return (hi << 32) | lo;
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

RngStream stream_for(std::uint64_t seed, std::uint64_t iteration, std::uint32_t mode,
                     std::uint64_t index) {
  return RngStream(seed, iteration, mode, index);
}

double sample_normal(RngStream& s) {
  if (s.has_spare_) {
    s.has_spare_ = false;
    return s.spare_normal_;
  }
  double x, y, r2;
  do {
    x = 2.0 * s.uniform() - 1.0;
    y = 2.0 * s.uniform() - 1.0;
    r2 = x * x + y * y;
  } while (r2 >= 1.0 || r2 == 0.0);
  const double f = std::sqrt(-2.0 * std::log(r2) / r2);
  s.spare_normal_ = y * f;
  s.has_spare_ = true;
  return x * f;
}

double sample_gamma(RngStream& s, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
    throw std::invalid_argument("gamma requires positive finite shape and rate, got shape=" +
                                std::to_string(shape) + " rate=" + std::to_string(rate));
  }
  if (shape < 1.0) {
    const double g = sample_gamma(s, shape + 1.0, 1.0);
    return g * std::pow(s.uniform_open(), 1.0 / shape) / rate;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = sample_normal(s);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = s.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double sample_beta(RngStream& s, double a, double b) {
  const double x = sample_gamma(s, a, 1.0);
  const double y = sample_gamma(s, b, 1.0);
  double p = x / (x + y);
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  if (!(p > lo)) p = lo;
  if (p > hi) p = hi;
  return p;
}

int sample_bernoulli(RngStream& s, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("bernoulli probability outside [0,1]: " + std::to_string(p));
  }
  return s.uniform() < p ? 1 : 0;
}

}  // namespace gibbsmf
