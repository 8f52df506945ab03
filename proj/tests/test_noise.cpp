#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "gibbsmf/errors.hpp"
#include "gibbsmf/noise.hpp"

using namespace gibbsmf;

TEST(NoiseSpec, ParsesBothForms) {
  const auto f = parse_noise_spec("fixed:5");
  ASSERT_TRUE(std::holds_alternative<FixedNoise>(f));
  EXPECT_EQ(std::get<FixedNoise>(f).alpha, 5.0);
  const auto a = parse_noise_spec("adaptive:1.5:0.25");
  ASSERT_TRUE(std::holds_alternative<AdaptiveNoise>(a));
  EXPECT_EQ(std::get<AdaptiveNoise>(a).a0, 1.5);
  EXPECT_EQ(std::get<AdaptiveNoise>(a).b0, 0.25);
}

TEST(NoiseSpec, RejectsMalformed) {
  for (const char* bad : {"", "fixed", "fixed:", "fixed:0", "fixed:-1", "fixed:abc", "fixed:1:2",
                          "adaptive:1", "adaptive:1:0", "adaptive:1:x", "probit:1", "fixed:inf"}) {
    EXPECT_THROW(parse_noise_spec(bad), UsageError) << bad;
  }
}

TEST(NoiseSpec, FormatRoundTrips) {
  for (const char* text : {"fixed:5", "fixed:0.10000000000000001", "adaptive:1:1",
                           "adaptive:2.5:0.001"}) {
    const auto spec = parse_noise_spec(text);
    const auto again = parse_noise_spec(format_noise_spec(spec));
    EXPECT_EQ(format_noise_spec(again), format_noise_spec(spec));
  }
  EXPECT_EQ(format_noise_spec(FixedNoise{5.0}), "fixed:5");
  EXPECT_EQ(format_noise_spec(AdaptiveNoise{1.0, 2.0}), "adaptive:1:2");
}

TEST(NoiseState, FixedIgnoresResiduals) {
  NoiseState n(FixedNoise{7.0});
  auto s = stream_for(1, 0, 0, 0);
  n.initialize(s);
  EXPECT_EQ(n.current_precision(), 7.0);
  EXPECT_EQ(n.update_precision(123.0, 10, s), 7.0);
  EXPECT_EQ(s.draws(), 0u);
  EXPECT_FALSE(n.adaptive());
}

TEST(NoiseState, AdaptivePosteriorMoments) {
  // Gamma(a0 + n/2, b0 + sse/2) with a0 = 2, b0 = 1, n = 40, sse = 10
  const double shape = 2.0 + 20.0, rate = 1.0 + 5.0;
  const int draws = 100000;
  double sum = 0.0, sq = 0.0;
  NoiseState n(AdaptiveNoise{2.0, 1.0});
  for (int t = 0; t < draws; ++t) {
    auto s = stream_for(2, static_cast<std::uint64_t>(t), 0, 0);
    const double a = n.update_precision(10.0, 40, s);
    sum += a;
    sq += a * a;
  }
  const double mean = sum / draws;
  const double var = sq / draws - mean * mean;
  const double true_mean = shape / rate;
  const double true_var = shape / (rate * rate);
  EXPECT_NEAR(mean, true_mean, 3.0 * std::sqrt(true_var / draws));
  EXPECT_NEAR(var, true_var, 0.03 * true_var);
}

TEST(NoiseState, AdaptiveInitializeDrawsFromPrior) {
  NoiseState n(AdaptiveNoise{3.0, 2.0});
  const int draws = 50000;
  double sum = 0.0;
  for (int t = 0; t < draws; ++t) {
    auto s = stream_for(3, static_cast<std::uint64_t>(t), 0, 0);
    n.initialize(s);
    sum += n.current_precision();
  }
  EXPECT_NEAR(sum / draws, 1.5, 5.0 * std::sqrt(0.75 / draws));
}

TEST(NoiseState, NegativeResidualSumThrows) {
  NoiseState n(AdaptiveNoise{});
  auto s = stream_for(4, 0, 0, 0);
  EXPECT_THROW(n.update_precision(-1e-12, 3, s), std::invalid_argument);
  EXPECT_THROW(n.update_precision(std::nan(""), 3, s), std::invalid_argument);
  NoiseState f(FixedNoise{1.0});
  EXPECT_THROW(f.update_precision(-1.0, 3, s), std::invalid_argument);
}

TEST(NoiseState, ZeroResidualsStayFinite) {
  NoiseState n(AdaptiveNoise{1.0, 1.0});
  auto s = stream_for(5, 0, 0, 0);
  const double a = n.update_precision(0.0, 1000, s);
  EXPECT_TRUE(std::isfinite(a));
  EXPECT_GT(a, 0.0);
}

TEST(NoiseState, RejectsInvalidSpecs) {
  EXPECT_THROW(NoiseState(FixedNoise{0.0}), UsageError);
  EXPECT_THROW(NoiseState(AdaptiveNoise{-1.0, 1.0}), UsageError);
}
