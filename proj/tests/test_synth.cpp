#include <gtest/gtest.h>

#include "ramp_stdae/synth.hpp"
#include "test_helpers.hpp"

using namespace ramp_stdae;

TEST(Synth, DefaultLengthIsWholeDays) {
  const auto data = generate(default_interchange(), SynthConfig{});
  EXPECT_EQ(data.mainline.steps(), 23 * 86400 / 300);
  EXPECT_EQ(data.mainline.steps(), 6624);
  EXPECT_EQ(data.ramps.steps(), 6624);
  EXPECT_EQ(data.mainline.values.sizes(), (std::vector<std::int64_t>{6624, 8, 4}));
  EXPECT_EQ(data.ramps.values.sizes(), (std::vector<std::int64_t>{6624, 12, 1}));
}

TEST(Synth, NoiseFreeRampIsSplitOfLaggedUpstream) {
  const auto spec = default_interchange();
  SynthConfig cfg;
  cfg.days = 2;
  cfg.noise_std = 0.0;
  const auto data = generate(spec, cfg);
  const auto r = cfg.resolved(spec);
  auto ml = data.mainline.values.accessor<double, 3>();
  auto rp = data.ramps.values.accessor<double, 3>();
  for (std::int64_t m = 0; m < spec.num_movements(); ++m) {
    const auto up = spec.direction_index(spec.movements[m].upstream);
    for (std::int64_t t = r.lags[m]; t < data.ramps.steps(); ++t) {
      EXPECT_NEAR(rp[t][m][0], r.split_fractions[m] * ml[t - r.lags[m]][up][kFlow], 1e-9);
    }
  }
}

TEST(Synth, ExactFractionWithZeroLag) {
  InterchangeSpec spec;
  spec.name = "one";
  spec.directions = {"A", "B"};
  spec.movements = {{"A to B", "A", "B", "A to B"}};
  SynthConfig cfg;
  cfg.days = 1;
  cfg.noise_std = 0.0;
  cfg.diurnal_amplitude = 0.0;
  cfg.base_flow = 100.0;
  cfg.split_fractions = {0.25};
  cfg.lags = {0};
  const auto data = generate(spec, cfg);
  EXPECT_DOUBLE_EQ(data.ramps.values[0][0][0].item<double>(), 25.0);
  EXPECT_DOUBLE_EQ(data.ramps.values.max().item<double>(), 25.0);
}

TEST(Synth, SeedDeterminism) {
  SynthConfig cfg;
  cfg.days = 2;
  cfg.seed = 7;
  const auto a = generate(default_interchange(), cfg);
  const auto b = generate(default_interchange(), cfg);
  EXPECT_TRUE(torch::equal(a.mainline.values, b.mainline.values));
  EXPECT_TRUE(torch::equal(a.ramps.values, b.ramps.values));
  cfg.seed = 8;
  const auto c = generate(default_interchange(), cfg);
  EXPECT_FALSE(torch::equal(a.ramps.values, c.ramps.values));
}

TEST(Synth, FlowsNonNegativeAndSpeedsInBand) {
  SynthConfig cfg;
  cfg.days = 3;
  cfg.noise_std = 40.0;
  cfg.level_std = 30.0;
  const auto data = generate(default_interchange(), cfg);
  const auto flow = data.mainline.values.select(2, kFlow);
  const auto speed = data.mainline.values.select(2, kSpeed);
  EXPECT_GE(flow.min().item<double>(), 0.0);
  EXPECT_GE(data.ramps.values.min().item<double>(), 0.0);
  EXPECT_GE(speed.min().item<double>(), cfg.min_speed);
  EXPECT_LE(speed.max().item<double>(), cfg.free_flow_speed);
}

TEST(Synth, PeakFlowMapsNearSixtyKmh) {
  SynthConfig cfg;
  cfg.days = 1;
  cfg.noise_std = 0.0;
  const auto data = generate(default_interchange(), cfg);
  const auto speed = data.mainline.values.select(2, kSpeed);
  EXPECT_NEAR(speed.min().item<double>(), 60.0, 0.5);
}

TEST(Synth, LengthMismatchIsAConfigError) {
  SynthConfig cfg;
  cfg.split_fractions = {0.1, 0.2};
  EXPECT_THROW(generate(default_interchange(), cfg), ConfigError);
  SynthConfig lags;
  lags.lags = {1};
  EXPECT_THROW(generate(default_interchange(), lags), ConfigError);
}

TEST(Synth, SplitSumAboveOneIsRejected) {
  SynthConfig cfg;
  cfg.split_fractions.assign(12, 0.5);
  EXPECT_THROW(generate(default_interchange(), cfg), ConfigError);
}

TEST(Synth, ConfigJsonRoundTrip) {
  SynthConfig cfg;
  cfg.days = 5;
  cfg.lags = std::vector<std::int64_t>(12, 2);
  cfg.level_std = 3.5;
  const auto back = SynthConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.to_json(), cfg.to_json());
}
