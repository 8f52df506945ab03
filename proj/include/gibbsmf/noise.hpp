#pragma once

#include <cstddef>
#include <string>
#include <variant>

#include "gibbsmf/rng.hpp"

namespace gibbsmf {

struct FixedNoise {
  double alpha = 5.0;
};

/// Gamma(a0, b0) prior on the precision, rate parameterization.
struct AdaptiveNoise {
  double a0 = 1.0;
  double b0 = 1.0;
};

using NoiseSpec = std::variant<FixedNoise, AdaptiveNoise>;

/// Parses `fixed:<alpha>` or `adaptive:<a0>:<b0>`; throws UsageError.
NoiseSpec parse_noise_spec(const std::string& text);
std::string format_noise_spec(const NoiseSpec& spec);

/// Observation precision of one matrix.
class NoiseState {
 public:
  NoiseState() = default;
  explicit NoiseState(NoiseSpec spec);

  /// Fixed: alpha. Adaptive: one draw from the Gamma(a0, b0) prior.
  void initialize(RngStream& s);

  /// Adaptive: alpha ~ Gamma(a0 + n/2, b0 + sse/2). Fixed: no-op.
  /// Throws std::invalid_argument on negative sse.
  double update_precision(double sse, std::size_t n, RngStream& s);

  double current_precision() const { return alpha_; }
  bool adaptive() const { return std::holds_alternative<AdaptiveNoise>(spec_); }
  const NoiseSpec& spec() const { return spec_; }

  /// Restores a precision read back from a snapshot.
  void set_precision(double alpha) { alpha_ = alpha; }

 private:
  NoiseSpec spec_ = FixedNoise{};
  double alpha_ = 5.0;
};

}  // namespace gibbsmf
