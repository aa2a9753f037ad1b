#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ramp_stdae/dataset.hpp"
#include "ramp_stdae/metrics.hpp"
#include "ramp_stdae/predictor.hpp"
#include "ramp_stdae/stdae.hpp"
#include "ramp_stdae/synth.hpp"
#include "ramp_stdae/training.hpp"

namespace ramp_stdae {

struct RobustnessConfig {
  std::vector<std::int64_t> intervals{180, 300, 600};
  MaskSpec directional = MaskSpec::directional({"E-up", "E-down"});
  MaskSpec temporal = MaskSpec::temporal(6, 12);
};

/// Everything one workflow run needs. Loaded from a single JSON document; CLI
/// flags override individual fields.
struct ExperimentConfig {
  std::filesystem::path dataset_dir = "runs/dataset";
  std::filesystem::path interchange;  // empty = built-in double-cross interchange
  std::filesystem::path output_dir = "runs/experiment";
  std::int64_t interval_sec = 300;
  std::int64_t input_len = 12;   // T
  std::int64_t long_len = 0;     // T_long; 0 = one day of steps
  std::int64_t horizon = 12;     // S
  std::int64_t patch_len = 12;   // L
  std::int64_t last_patches = 1; // T'
  StdaeConfig stdae;             // dimensions are filled in from the data
  PredictorConfig predictor;     // dimensions are filled in from the data
  FusionMode fusion = FusionMode::kBoth;
  MaskSpec mask;
  TrainConfig pretrain;
  TrainConfig train;
  SynthConfig synth;
  std::vector<std::int64_t> horizons{3, 6, 12};
  RobustnessConfig robustness;
  bool plot = false;

  ExperimentConfig();

  std::int64_t resolved_long_len(std::int64_t interval) const;
  WindowConfig windows(std::int64_t interval) const;
  /// Checks the cross-field invariants; `check_paths` also requires the
  /// referenced input paths to exist.
  void validate(bool check_paths) const;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& doc);
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// Applies "a.b.c=value" style overrides (value parsed as JSON, falling back
/// to a plain string) to a config document.
void apply_override(nlohmann::json& doc, const std::string& assignment);

InterchangeSpec resolve_interchange(const ExperimentConfig& cfg);

StdaeConfig stdae_config_for(const ExperimentConfig& cfg, const PreparedData& data);
ForecasterConfig forecaster_config_for(const ExperimentConfig& cfg, const PreparedData& data, FusionMode mode);

/// Writes `config.resolved.json` into `dir`.
void write_config_snapshot(const ExperimentConfig& cfg, const std::filesystem::path& dir);

// Workflow steps. Each writes its artifacts under cfg.output_dir (synth
// writes the dataset to cfg.dataset_dir) and returns its main result.
std::filesystem::path run_synth(const ExperimentConfig& cfg);
PretrainResult run_pretrain(const ExperimentConfig& cfg);
MetricsReport run_train(const ExperimentConfig& cfg);
MetricsReport run_eval(const ExperimentConfig& cfg);
std::map<std::string, MetricsReport> run_ablate(const ExperimentConfig& cfg);

struct RobustnessCell {
  std::int64_t interval_sec = 0;
  std::string mask;
  MetricsReport enhanced;
  MetricsReport baseline;
  double mae_reduction() const { return (baseline.overall.mae - enhanced.overall.mae) / baseline.overall.mae; }
};
std::vector<RobustnessCell> run_robustness(const ExperimentConfig& cfg);

/// Trains one forecaster per seed in `cfg.train.seeds` and evaluates each on
/// the test split; returns the seed-averaged report. Checkpoints go to
/// `out_dir/seed_<k>`.
MetricsReport train_and_evaluate(const ExperimentConfig& cfg, const PreparedData& data, Stdae* pretrained,
                                 FusionMode mode, const MaskSpec& mask, const std::filesystem::path& out_dir,
                                 const std::string& pretrain_id = "");

}  // namespace ramp_stdae
