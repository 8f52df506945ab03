#include "gibbsmf/noise.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "gibbsmf/errors.hpp"

namespace gibbsmf {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, sep)) out.push_back(part);
  return out;
}

double positive(const std::string& field, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != field.size() || !(v > 0.0) || !std::isfinite(v)) {
    throw UsageError("invalid noise spec '" + text +
                     "': parameters must be positive numbers (fixed:<alpha> or "
                     "adaptive:<a0>:<b0>)");
  }
  return v;
}

}  // namespace

NoiseSpec parse_noise_spec(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() == 2 && parts[0] == "fixed") {
    return FixedNoise{positive(parts[1], text)};
  }
  if (parts.size() == 3 && parts[0] == "adaptive") {
    return AdaptiveNoise{positive(parts[1], text), positive(parts[2], text)};
  }
  throw UsageError("invalid noise spec '" + text + "': use fixed:<alpha> or adaptive:<a0>:<b0>");
}

std::string format_noise_spec(const NoiseSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  if (const auto* f = std::get_if<FixedNoise>(&spec)) {
    out << "fixed:" << f->alpha;
  } else {
    const auto& a = std::get<AdaptiveNoise>(spec);
    out << "adaptive:" << a.a0 << ":" << a.b0;
  }
  return out.str();
}

NoiseState::NoiseState(NoiseSpec spec) : spec_(spec) {
  if (const auto* f = std::get_if<FixedNoise>(&spec_)) {
    if (!(f->alpha > 0.0)) throw UsageError("fixed noise precision must be positive");
    alpha_ = f->alpha;
  } else {
    const auto& a = std::get<AdaptiveNoise>(spec_);
    if (!(a.a0 > 0.0) || !(a.b0 > 0.0)) {
      throw UsageError("adaptive noise parameters must be positive");
    }
  }
}

void NoiseState::initialize(RngStream& s) {
  if (const auto* a = std::get_if<AdaptiveNoise>(&spec_)) {
    alpha_ = sample_gamma(s, a->a0, a->b0);
  } else {
    alpha_ = std::get<FixedNoise>(spec_).alpha;
  }
}

double NoiseState::update_precision(double sse, std::size_t n, RngStream& s) {
  if (!(sse >= 0.0)) {
    throw std::invalid_argument("sum of squared residuals must be non-negative");
  }
  if (const auto* a = std::get_if<AdaptiveNoise>(&spec_)) {
    alpha_ = sample_gamma(s, a->a0 + 0.5 * static_cast<double>(n), a->b0 + 0.5 * sse);
    if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) {
      throw NumericalError("adaptive noise precision became non-finite or zero");
    }
  }
  return alpha_;
}

}  // namespace gibbsmf
