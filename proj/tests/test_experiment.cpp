#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "ramp_stdae/experiment.hpp"
#include "test_helpers.hpp"

using namespace ramp_stdae;

TEST(ExperimentConfig, DefaultsAreValid) {
  ExperimentConfig cfg;
  EXPECT_NO_THROW(cfg.validate(false));
  EXPECT_EQ(cfg.resolved_long_len(300), 288);
  EXPECT_EQ(cfg.resolved_long_len(180), 480);
  EXPECT_EQ(cfg.pretrain.max_epochs, 50);
  EXPECT_EQ(cfg.train.max_epochs, 100);
}

TEST(ExperimentConfig, CrossFieldViolationsAreNamed) {
  ExperimentConfig cfg;
  cfg.patch_len = 10;
  try {
    cfg.validate(false);
    FAIL();
  } catch (const ValidationError& e) {
    bool long_len = false, input_len = false;
    for (const auto& v : e.violations()) {
      long_len |= v.rfind("long_len", 0) == 0;
      input_len |= v.rfind("input_len", 0) == 0;
    }
    EXPECT_TRUE(long_len);
    EXPECT_TRUE(input_len);
  }
  ExperimentConfig paths;
  paths.interchange = "/definitely/not/here.json";
  EXPECT_NO_THROW(paths.validate(false));
  EXPECT_THROW(paths.validate(true), ValidationError);
}

TEST(ExperimentConfig, UnknownFieldIsRejected) {
  EXPECT_THROW(ExperimentConfig::from_json({{"learning_rate", 0.1}}), ValidationError);
}

TEST(ExperimentConfig, JsonRoundTripAndOverrides) {
  ExperimentConfig cfg;
  cfg.mask = MaskSpec::temporal(6, 12);
  cfg.train.seeds = {0, 1, 2};
  auto doc = cfg.to_json();
  apply_override(doc, "train.learning_rate=0.01");
  apply_override(doc, "fusion=tae");
  apply_override(doc, "stdae.embed_dim=32");
  apply_override(doc, "output_dir=runs/x");
  const auto back = ExperimentConfig::from_json(doc);
  EXPECT_DOUBLE_EQ(back.train.learning_rate, 0.01);
  EXPECT_EQ(back.fusion, FusionMode::kTemporal);
  EXPECT_EQ(back.stdae.embed_dim, 32);
  EXPECT_EQ(back.output_dir, "runs/x");
  EXPECT_EQ(back.train.seeds, (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(ExperimentConfig::from_json(cfg.to_json()).to_json(), cfg.to_json());
  EXPECT_THROW(apply_override(doc, "no-equals-sign"), ParseError);
}

TEST(ExperimentConfig, ShippedConfigsLoad) {
  for (const char* name : {"default.json", "small_cpu.json"}) {
    const auto cfg = ExperimentConfig::load(std::filesystem::path(RAMP_STDAE_CONFIG_DIR) / name);
    EXPECT_NO_THROW(cfg.validate(false)) << name;
  }
}

TEST(Workflow, SynthThenSnapshotReproducesDataset) {
  test::TempDir dir("wf");
  ExperimentConfig cfg;
  cfg.interval_sec = 900;
  cfg.synth.days = 2;
  cfg.dataset_dir = dir.path() / "ds";
  cfg.output_dir = dir.path() / "out";
  run_synth(cfg);
  const auto snapshot = ExperimentConfig::load(cfg.dataset_dir / "config.resolved.json");
  auto again = snapshot;
  again.dataset_dir = dir.path() / "ds2";
  run_synth(again);
  for (const char* f : {"meta.json", "mainline.csv", "ramp.csv"}) {
    std::ifstream a(cfg.dataset_dir / f), b(again.dataset_dir / f);
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    EXPECT_EQ(sa, sb) << f;
  }
}

namespace {

int run_cli(const std::string& args) {
  const auto cmd = std::string(RAMP_STDAE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, InvalidConfigExitsNonZero) {
  EXPECT_EQ(run_cli("train --set patch_len=7"), 2);
  EXPECT_EQ(run_cli("train --set bogus=1"), 2);
  EXPECT_NE(run_cli("frobnicate"), 0);
}

TEST(Cli, SynthExposesGeneratorFlags) {
  test::TempDir dir("cli");
  const auto ds = (dir.path() / "ds").string();
  ASSERT_EQ(run_cli("synth --dataset " + ds + " --out " + (dir.path() / "o").string() +
                    " --days 1 --interval-sec 900 --noise-std 0 --seed 4 --base-flow 50"),
            0);
  const auto data = load_dataset(ds);
  EXPECT_EQ(data.mainline.steps(), 96);
  EXPECT_EQ(data.spec.interval_sec, 900);
  const auto snap = ExperimentConfig::load(dir.path() / "ds" / "config.resolved.json");
  EXPECT_EQ(snap.synth.seed, 4u);
  EXPECT_DOUBLE_EQ(snap.synth.base_flow, 50.0);
}
