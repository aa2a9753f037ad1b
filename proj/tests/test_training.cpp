#include <gtest/gtest.h>

#include <fstream>

#include "ramp_stdae/training.hpp"
#include "test_helpers.hpp"

using namespace ramp_stdae;

namespace {

TrainConfig quick(std::int64_t epochs = 2) {
  TrainConfig t;
  t.max_epochs = epochs;
  t.batch_size = 8;
  t.max_batches_per_epoch = 4;
  t.max_eval_samples = 32;
  return t;
}

ForecasterConfig forecaster_for(const PreparedData& data, FusionMode mode, std::int64_t dim) {
  ForecasterConfig f;
  f.mode = mode;
  f.stdae_dim = dim;
  f.fusion_hidden = dim;
  f.predictor.num_nodes = data.spec.num_movements();
  f.predictor.input_len = 12;
  f.predictor.horizon = 12;
  return f;
}

const PreparedData& small_data() {
  static const PreparedData data = prepare(test::coarse_synth(2.0), {12, 48, 12});
  return data;
}

}  // namespace

TEST(TrainConfig, Validation) {
  TrainConfig t;
  EXPECT_NO_THROW(t.validate());
  t.learning_rate = 0;
  EXPECT_ANY_THROW(t.validate());
  t = TrainConfig{};
  t.seeds.clear();
  EXPECT_ANY_THROW(t.validate());
  EXPECT_EQ(TrainConfig::from_json(quick().to_json()).to_json(), quick().to_json());
}

TEST(Training, EvaluationIndices) {
  EXPECT_EQ(evaluation_indices(5, 0), (std::vector<std::int64_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(evaluation_indices(10, 5), (std::vector<std::int64_t>{0, 2, 4, 6, 8}));
}

TEST(Training, OverfitOneBatchDecreasesLoss) {
  const auto& data = small_data();
  torch::manual_seed(0);
  Stdae model(test::small_stdae(12, 48));
  const auto batch = pretrain_batch(data.train, {0, 50, 100, 150}, MaskSpec::none(), data.spec, 12);
  const auto losses = overfit_one_batch(model, batch, 60, 2e-3);
  ASSERT_EQ(losses.size(), 61u);
  EXPECT_LT(losses.back(), 0.5 * losses.front());
}

TEST(Training, PretrainWritesArtifactsAndIsDeterministic) {
  const auto& data = small_data();
  test::TempDir dir("pre");
  const auto a = pretrain(data, test::small_stdae(12, 48), quick(), MaskSpec::temporal(6, 12), dir.path() / "a");
  const auto b = pretrain(data, test::small_stdae(12, 48), quick(), MaskSpec::temporal(6, 12), {});
  for (const char* f : {"stdae.pt", "config.json", "normalizer.json", "train_log.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "a" / f)) << f;
  }
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_NEAR(a.history[i].val_loss, b.history[i].val_loss, 1e-6);
  }
  std::ifstream log(dir.path() / "a" / "train_log.csv");
  std::string header;
  std::getline(log, header);
  EXPECT_EQ(header, "epoch,train_loss,val_loss,wall_sec");
}

TEST(Training, DownstreamSeedDeterminism) {
  const auto& data = small_data();
  const auto cfg = forecaster_for(data, FusionMode::kNone, 16);
  DownstreamOptions opts;
  opts.seed = 3;
  auto a = train_downstream(data, nullptr, cfg, quick(), MaskSpec::none(), opts, {});
  auto b = train_downstream(data, nullptr, cfg, quick(), MaskSpec::none(), opts, {});
  const auto ra = evaluate(a.model, nullptr, data.test, data.normalizer, MaskSpec::none(), data.spec);
  const auto rb = evaluate(b.model, nullptr, data.test, data.normalizer, MaskSpec::none(), data.spec);
  EXPECT_NEAR(ra.overall.mae, rb.overall.mae, 1e-4 * rb.overall.mae);
  EXPECT_NEAR(ra.overall.rmse, rb.overall.rmse, 1e-4 * rb.overall.rmse);
  EXPECT_EQ(ra.by_movement.size(), 12u);
  EXPECT_EQ(ra.by_horizon.size(), 3u);
}

TEST(Training, ZeroFrozenFusionMatchesBareRun) {
  const auto& data = small_data();
  auto pre = pretrain(data, test::small_stdae(12, 48), quick(1), MaskSpec::none(), {});
  DownstreamOptions opts;
  opts.seed = 5;
  auto bare = train_downstream(data, nullptr, forecaster_for(data, FusionMode::kNone, 16), quick(), MaskSpec::none(),
                               opts, {});
  opts.freeze_fusion_at_zero = true;
  auto zeroed = train_downstream(data, &pre.model, forecaster_for(data, FusionMode::kBoth, 16), quick(),
                                 MaskSpec::none(), opts, {});
  const auto rb = evaluate(bare.model, nullptr, data.test, data.normalizer, MaskSpec::none(), data.spec);
  const auto rz = evaluate(zeroed.model, &pre.model, data.test, data.normalizer, MaskSpec::none(), data.spec);
  EXPECT_NEAR(rz.overall.mae, rb.overall.mae, 1e-6);
  EXPECT_NEAR(rz.overall.rmse, rb.overall.rmse, 1e-6);
}

TEST(Training, ForecasterCheckpointRoundTrip) {
  const auto& data = small_data();
  test::TempDir dir("fc");
  auto pre = pretrain(data, test::small_stdae(12, 48), quick(1), MaskSpec::none(), {});
  DownstreamOptions opts;
  opts.pretrain_id = "stdae#abc";
  auto run = train_downstream(data, &pre.model, forecaster_for(data, FusionMode::kTemporal, 16), quick(1),
                              MaskSpec::temporal(6, 12), opts, dir.path());
  auto loaded = load_forecaster(dir.path(), data.spec);
  EXPECT_EQ(loaded.pretrain_id, "stdae#abc");
  EXPECT_EQ(loaded.mask.to_json(), MaskSpec::temporal(6, 12).to_json());
  const auto a = predict(run.model, &pre.model, data.test, data.normalizer, loaded.mask, data.spec);
  const auto b = predict(loaded.model, &pre.model, data.test, loaded.normalizer, loaded.mask, data.spec);
  EXPECT_EQ(a.pred, b.pred);
  EXPECT_EQ(a.samples, data.test.size());
}

TEST(Training, IncompatibleCheckpointIsAConfigError) {
  const auto& data = small_data();
  Stdae wrong(test::small_stdae(12, 96));
  EXPECT_THROW(train_downstream(data, &wrong, forecaster_for(data, FusionMode::kBoth, 16), quick(1),
                                MaskSpec::none(), {}, {}),
               ConfigError);
  EXPECT_THROW(train_downstream(data, nullptr, forecaster_for(data, FusionMode::kBoth, 16), quick(1),
                                MaskSpec::none(), {}, {}),
               ConfigError);
}
