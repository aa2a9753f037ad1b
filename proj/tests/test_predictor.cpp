#include <gtest/gtest.h>

#include "ramp_stdae/predictor.hpp"
#include "ramp_stdae/topology.hpp"
#include "test_helpers.hpp"

using namespace ramp_stdae;

namespace {

ForecasterConfig forecaster_config(FusionMode mode, std::int64_t stdae_dim = 16) {
  ForecasterConfig c;
  c.mode = mode;
  c.stdae_dim = stdae_dim;
  c.fusion_hidden = stdae_dim;
  return c;
}

}  // namespace

TEST(Predictor, HiddenFieldShape) {
  torch::manual_seed(0);
  GraphWaveNet gwn(PredictorConfig{}, full_adjacency(default_interchange()));
  const auto h = gwn->forward(torch::randn({2, 12, 12, 8}));
  EXPECT_EQ(h.sizes(), (std::vector<std::int64_t>{2, 12, 12, 32}));
}

TEST(Predictor, ZeroInputWithZeroBiasesGivesZero) {
  torch::manual_seed(1);
  GraphWaveNet gwn(PredictorConfig{}, full_adjacency(default_interchange()));
  torch::NoGradGuard g;
  for (auto& item : gwn->named_parameters()) {
    if (item.key().find("bias") != std::string::npos) item.value().zero_();
  }
  const auto h = gwn->forward(torch::zeros({1, 12, 12, 8}));
  EXPECT_EQ(h.abs().max().item<float>(), 0.0f);
}

TEST(Predictor, NodePermutationEquivariance) {
  torch::manual_seed(2);
  const auto spec = default_interchange();
  GraphWaveNet gwn(PredictorConfig{}, full_adjacency(spec));
  gwn->eval();
  torch::NoGradGuard g;
  // A non-uniform support so the permutation of the fixed graph matters too.
  auto support = torch::rand({12, 12});
  support = support / support.sum(1, true);
  gwn->set_support(support);
  const auto x = torch::randn({2, 12, 12, 8});
  const auto h = gwn->forward(x);

  const auto perm = torch::randperm(12, torch::kLong);
  gwn->set_support(support.index_select(0, perm).index_select(1, perm));
  gwn->source_embedding.copy_(gwn->source_embedding.index_select(0, perm));
  gwn->target_embedding.copy_(gwn->target_embedding.index_select(0, perm));
  const auto hp = gwn->forward(x.index_select(2, perm));
  EXPECT_LT(test::max_abs_diff(hp, h.index_select(2, perm)), 1e-5);
}

TEST(Predictor, SupportIsRowNormalizedWithSelfLoops) {
  const auto s = normalized_support(full_adjacency(default_interchange()));
  EXPECT_LT(test::max_abs_diff(s.sum(1), torch::ones({12})), 1e-6);
  EXPECT_NEAR(s[0][0].item<float>(), 1.0 / 12.0, 1e-6);
}

TEST(ExtractLastPatches, BroadcastsLastPatch) {
  const auto h = torch::randn({1, 12, 24, 96});
  const auto out = extract_last_patches(h, 1, 12, 12);
  ASSERT_EQ(out.sizes(), (std::vector<std::int64_t>{1, 12, 12, 96}));
  for (std::int64_t t = 0; t < 12; ++t) EXPECT_TRUE(torch::equal(out[0][t], h[0].select(1, 23)));
}

TEST(ExtractLastPatches, ReadsOnlyTheTail) {
  const auto h = torch::randn({2, 5, 6, 8});
  auto h2 = h.clone();
  h2.narrow(2, 0, 4).normal_();
  EXPECT_TRUE(torch::equal(extract_last_patches(h, 2, 3, 6), extract_last_patches(h2, 2, 3, 6)));
}

TEST(ExtractLastPatches, AllPatchesAndRangeError) {
  const auto h = torch::randn({1, 3, 4, 8});
  const auto out = extract_last_patches(h, 4, 3, 12);
  ASSERT_EQ(out.sizes(), (std::vector<std::int64_t>{1, 12, 3, 8}));
  for (std::int64_t t = 0; t < 12; ++t) EXPECT_TRUE(torch::equal(out[0][t], h[0].select(1, t / 3)));
  EXPECT_THROW(extract_last_patches(h, 5, 3, 12), std::out_of_range);
}

TEST(Fuse, ZeroProjectionIsIdentityOnHidden) {
  torch::manual_seed(3);
  FusionMlp ms(16, 16, 32), mt(16, 16, 32);
  torch::NoGradGuard g;
  for (auto* m : {&ms, &mt})
    for (auto& p : (*m)->parameters()) p.zero_();
  const auto hs = torch::randn({2, 12, 12, 16}), ht = torch::randn({2, 12, 12, 16}), hf = torch::randn({2, 12, 12, 32});
  EXPECT_TRUE(torch::equal(fuse(hs, ht, hf, ms, mt), hf));
}

TEST(Fuse, ZeroRepresentationsWithZeroBiases) {
  torch::manual_seed(4);
  FusionMlp ms(16, 16, 32), mt(16, 16, 32);
  torch::NoGradGuard g;
  for (auto* m : {&ms, &mt}) {
    (*m)->fc1->bias.zero_();
    (*m)->fc2->bias.zero_();
  }
  const auto z = torch::zeros({1, 12, 12, 16});
  const auto hf = torch::randn({1, 12, 12, 32});
  EXPECT_TRUE(torch::equal(fuse(z, z, hf, ms, mt), hf));
}

TEST(Fuse, PathsAreNotInterchangeable) {
  torch::manual_seed(5);
  FusionMlp ms(16, 16, 32), mt(16, 16, 32);
  const auto hs = torch::randn({1, 12, 12, 16}), ht = torch::randn({1, 12, 12, 16}), hf = torch::randn({1, 12, 12, 32});
  torch::NoGradGuard g;
  const auto a = fuse(hs, ht, hf, ms, mt);
  const auto b = fuse(hs, ht, hf, mt, ms);
  EXPECT_GT(test::max_abs_diff(a, b), 1e-3);
  EXPECT_LT(test::max_abs_diff(a, ms->forward(hs) + mt->forward(ht) + hf), 1e-6);
}

TEST(Forecaster, ForecastShapeSweep) {
  torch::NoGradGuard g;
  const auto adj = full_adjacency(default_interchange());
  for (auto mode : {FusionMode::kNone, FusionMode::kSpatial, FusionMode::kTemporal, FusionMode::kBoth}) {
    for (std::int64_t s : {1, 3, 12}) {
      auto cfg = forecaster_config(mode);
      cfg.predictor.horizon = s;
      Forecaster f(cfg, adj);
      f->eval();
      const auto reps = torch::randn({2, 12, 1, 16});
      const auto y = f->forward(torch::randn({2, 12, 12, 8}), reps, reps);
      EXPECT_EQ(y.sizes(), (std::vector<std::int64_t>{2, s, 12, 1}));
    }
  }
}

TEST(Forecaster, FrozenZeroFusionEqualsBarePredictor) {
  const auto adj = full_adjacency(default_interchange());
  torch::manual_seed(6);
  Forecaster bare(forecaster_config(FusionMode::kNone), adj);
  torch::manual_seed(6);
  Forecaster full(forecaster_config(FusionMode::kBoth), adj);
  full->freeze_fusion_at_zero();
  bare->eval();
  full->eval();
  torch::NoGradGuard g;
  const auto x = torch::randn({3, 12, 12, 8});
  const auto reps = torch::randn({3, 12, 1, 16});
  EXPECT_LT(test::max_abs_diff(full->forward(x, reps, reps * 2), bare->forward(x)), 1e-6);
  for (const auto& p : full->trainable_parameters()) {
    for (const auto& q : full->spatial_mlp->parameters()) EXPECT_FALSE(p.is_same(q));
  }
}

TEST(Forecaster, ModeStrings) {
  for (auto mode : {FusionMode::kNone, FusionMode::kSpatial, FusionMode::kTemporal, FusionMode::kBoth}) {
    EXPECT_EQ(fusion_mode_from_string(to_string(mode)), mode);
  }
  EXPECT_EQ(to_string(FusionMode::kBoth), "full");
  EXPECT_ANY_THROW(fusion_mode_from_string("both-ish"));
}

TEST(OutputHead, Denormalization) {
  const Normalizer n(std::vector<double>(8, 0.0), std::vector<double>(8, 1.0), 17.5, 4.0);
  const auto zero = denormalize_forecast(torch::zeros({1, 12, 12, 1}), &n);
  EXPECT_EQ(zero.sizes(), (std::vector<std::int64_t>{1, 12, 12, 1}));
  EXPECT_DOUBLE_EQ(zero.min().item<double>(), 17.5);
  EXPECT_DOUBLE_EQ(zero.max().item<double>(), 17.5);
  const auto y = torch::rand({4, 12, 12, 1}, torch::kFloat64) * 80.0;
  EXPECT_LT(test::max_abs_diff(denormalize_forecast(n.normalize_ramps(y), &n), y), 1e-9);
  EXPECT_THROW(denormalize_forecast(zero, nullptr), ConfigError);
}
