#include <gtest/gtest.h>
#include <fstream>

#include "ramp_stdae/stdae.hpp"
#include "test_helpers.hpp"

using namespace ramp_stdae;

TEST(Stdae, DefaultShapes) {
  torch::manual_seed(0);
  Stdae model(StdaeConfig{});
  model->eval();
  torch::NoGradGuard g;
  const auto x = torch::randn({1, 288, 12, 8});
  const auto e = model->embed(x);
  EXPECT_EQ(e.sizes(), (std::vector<std::int64_t>{1, 12, 24, 96}));
  const auto out = model->forward(x);
  EXPECT_EQ(out.spatial.sizes(), (std::vector<std::int64_t>{1, 12, 24, 96}));
  EXPECT_EQ(out.temporal.sizes(), (std::vector<std::int64_t>{1, 12, 24, 96}));
  EXPECT_EQ(out.spatial_recon.sizes(), (std::vector<std::int64_t>{1, 12, 24, 12}));
  EXPECT_EQ(out.temporal_recon.sizes(), (std::vector<std::int64_t>{1, 12, 24, 12}));
}

TEST(Stdae, SpatialBranchIsPatchEquivariant) {
  torch::manual_seed(1);
  const auto cfg = test::small_stdae(6, 96);
  AutoencoderBranch sae(cfg, Axis::kSpatial);
  sae->eval();
  torch::NoGradGuard g;
  const auto e = torch::randn({2, 6, 8, cfg.embed_dim});
  const auto perm = torch::randperm(8, torch::kLong);
  const auto h = sae->encode(e);
  EXPECT_LT(test::max_abs_diff(sae->encode(e.index_select(2, perm)), h.index_select(2, perm)), 1e-5);
  const auto y = sae->decode(h);
  EXPECT_LT(test::max_abs_diff(sae->decode(h.index_select(2, perm)), y.index_select(2, perm)), 1e-5);
}

TEST(Stdae, TemporalBranchIsNodeEquivariant) {
  torch::manual_seed(2);
  const auto cfg = test::small_stdae(6, 96);
  AutoencoderBranch tae(cfg, Axis::kTemporal);
  tae->eval();
  torch::NoGradGuard g;
  const auto e = torch::randn({2, 6, 8, cfg.embed_dim});
  const auto perm = torch::randperm(6, torch::kLong);
  const auto h = tae->encode(e);
  EXPECT_LT(test::max_abs_diff(tae->encode(e.index_select(1, perm)), h.index_select(1, perm)), 1e-5);
  const auto y = tae->decode(h);
  EXPECT_LT(test::max_abs_diff(tae->decode(h.index_select(1, perm)), y.index_select(1, perm)), 1e-5);
}

TEST(Stdae, SpatialBranchMixesNodesOnly) {
  torch::manual_seed(3);
  const auto cfg = test::small_stdae(6, 96);
  AutoencoderBranch sae(cfg, Axis::kSpatial);
  AutoencoderBranch tae(cfg, Axis::kTemporal);
  sae->eval();
  tae->eval();
  torch::NoGradGuard g;
  const auto e = torch::randn({1, 6, 8, cfg.embed_dim});
  auto e2 = e.clone();
  e2.select(2, 3).add_(1.0);  // perturb one patch
  const auto ds = (sae->encode(e2) - sae->encode(e)).abs().amax({0, 1, 3});
  for (std::int64_t p = 0; p < 8; ++p) EXPECT_EQ(ds[p].item<float>() > 0, p == 3) << p;
  auto e3 = e.clone();
  e3.select(1, 2).add_(1.0);  // perturb one node
  const auto dt = (tae->encode(e3) - tae->encode(e)).abs().amax({0, 2, 3});
  for (std::int64_t m = 0; m < 6; ++m) EXPECT_EQ(dt[m].item<float>() > 0, m == 2) << m;
}

TEST(Stdae, DegenerateSingleNodeAndSinglePatch) {
  torch::NoGradGuard g;
  auto one_node = test::small_stdae(1, 48);
  Stdae a(one_node);
  a->eval();
  const auto out = a->forward(torch::randn({2, 48, 1, 8}));
  EXPECT_EQ(out.spatial.sizes(), (std::vector<std::int64_t>{2, 1, 4, 16}));
  EXPECT_EQ(out.spatial_recon.sizes(), (std::vector<std::int64_t>{2, 1, 4, 12}));
  auto one_patch = test::small_stdae(5, 12);
  Stdae b(one_patch);
  b->eval();
  const auto out2 = b->forward(torch::randn({2, 12, 5, 8}));
  EXPECT_EQ(out2.temporal.sizes(), (std::vector<std::int64_t>{2, 5, 1, 16}));
  EXPECT_EQ(out2.temporal_recon.sizes(), (std::vector<std::int64_t>{2, 5, 1, 12}));
}

TEST(Stdae, FiniteOverRandomDraws) {
  torch::manual_seed(4);
  Stdae model(test::small_stdae(12, 48));
  model->eval();
  torch::NoGradGuard g;
  for (int i = 0; i < 100; ++i) {
    const auto out = model->forward(torch::randn({1, 48, 12, 8}) * (1.0 + i));
    ASSERT_TRUE(torch::isfinite(out.spatial_recon).all().item<bool>());
    ASSERT_TRUE(torch::isfinite(out.temporal_recon).all().item<bool>());
  }
}

TEST(Stdae, BatchIndependence) {
  torch::manual_seed(5);
  Stdae model(test::small_stdae(12, 48));
  model->eval();
  torch::NoGradGuard g;
  const auto x = torch::randn({2, 48, 12, 8});
  const auto both = model->forward(x);
  for (std::int64_t b = 0; b < 2; ++b) {
    const auto one = model->forward(x.narrow(0, b, 1));
    EXPECT_LT(test::max_abs_diff(both.spatial_recon.narrow(0, b, 1), one.spatial_recon), 1e-5);
    EXPECT_LT(test::max_abs_diff(both.temporal_recon.narrow(0, b, 1), one.temporal_recon), 1e-5);
  }
}

TEST(Stdae, EncodeLastMatchesSlicedForward) {
  torch::manual_seed(6);
  Stdae model(test::small_stdae(12, 48));
  model->eval();
  torch::NoGradGuard g;
  const auto x = torch::randn({3, 48, 12, 8});
  const auto full = model->forward(x);
  for (std::int64_t k : {1, 2, 4}) {
    auto [s, t] = model->encode_last(x, k);
    EXPECT_LT(test::max_abs_diff(s, full.spatial.narrow(2, 4 - k, k)), 1e-5);
    EXPECT_LT(test::max_abs_diff(t, full.temporal.narrow(2, 4 - k, k)), 1e-5);
  }
}

TEST(Stdae, WrongInputShapeIsAShapeError) {
  Stdae model(test::small_stdae(12, 48));
  EXPECT_THROW(model->forward(torch::randn({1, 47, 12, 8})), ShapeError);
  EXPECT_THROW(model->forward(torch::randn({1, 48, 11, 8})), ShapeError);
}

TEST(ReconstructionLoss, Examples) {
  const auto y = torch::randn({2, 12, 24, 12});
  EXPECT_EQ(reconstruction_loss(y, y, y).item<float>(), 0.0f);
  EXPECT_NEAR(reconstruction_loss(y + 1.0, y, y).item<float>(), 1.0, 1e-6);
  const auto es = torch::randn_like(y), et = torch::randn_like(y);
  const auto base = reconstruction_loss(y + es, y + et, y).item<float>();
  EXPECT_NEAR(reconstruction_loss(y + 2 * es, y + 2 * et, y).item<float>(), 2 * base, 1e-4);
  EXPECT_THROW(reconstruction_loss(y, y, y.narrow(3, 0, 6)), ShapeError);
}

TEST(ReconstructionLoss, RampPatchesLayout) {
  const auto ramps = torch::arange(48 * 3, torch::kFloat32).view({1, 48, 3, 1});
  const auto y = ramp_patches(ramps, 12);
  ASSERT_EQ(y.sizes(), (std::vector<std::int64_t>{1, 3, 4, 12}));
  EXPECT_EQ(y[0][2][1][5].item<float>(), ramps[0][12 + 5][2][0].item<float>());
}

TEST(Checkpoint, SaveLoadAndSidecarCheck) {
  test::TempDir dir("ckpt");
  torch::manual_seed(7);
  Stdae model(test::small_stdae(12, 48));
  model->eval();
  save_stdae(model, dir.path());
  const auto sidecar = nlohmann::json::parse(std::ifstream(dir.path() / "config.json"));
  for (const char* key : {"embed_dim", "n_encoder_layers", "n_decoder_layers", "heads", "patch_len", "t_long",
                          "channels", "dropout", "seed"}) {
    EXPECT_TRUE(sidecar.contains(key)) << key;
  }
  auto loaded = load_stdae(dir.path(), 12, 8, 48);
  torch::NoGradGuard g;
  const auto x = torch::randn({1, 48, 12, 8});
  EXPECT_TRUE(torch::equal(loaded->forward(x).spatial_recon, model->forward(x).spatial_recon));
  EXPECT_THROW(load_stdae(dir.path(), 11, 8, 48), ConfigError);
  EXPECT_THROW(load_stdae(dir.path(), 12, 8, 96), ConfigError);
  EXPECT_EQ(file_fingerprint(dir.path() / "stdae.pt"), file_fingerprint(dir.path() / "stdae.pt"));
}
