#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "ramp_stdae/dataset.hpp"
#include "ramp_stdae/metrics.hpp"
#include "ramp_stdae/predictor.hpp"
#include "ramp_stdae/stdae.hpp"

namespace ramp_stdae {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double learning_rate = 0.002;
  std::int64_t batch_size = 16;
  std::int64_t max_epochs = 50;
  std::int64_t patience = 10;
  std::vector<std::uint64_t> seeds{0};
  bool cosine_decay = false;
  double grad_clip = 5.0;                  // <= 0 disables clipping
  std::int64_t max_batches_per_epoch = 0;  // 0 = full pass over the training split
  std::int64_t max_eval_samples = 0;       // 0 = every validation sample

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& doc);
};

struct EpochLog {
  std::int64_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double wall_sec = 0.0;
};

/// CSV with header epoch,train_loss,val_loss,wall_sec.
void write_epoch_log(const std::filesystem::path& path, const std::vector<EpochLog>& history);

/// Evenly spaced subset of [0, n) of size min(n, limit); limit <= 0 keeps all.
std::vector<std::int64_t> evaluation_indices(std::int64_t n, std::int64_t limit);

/// One pretraining batch: masked long inputs and patched ramp targets.
struct PretrainBatch {
  torch::Tensor long_inputs;  // [B, T_long, M, C]
  torch::Tensor targets;      // [B, M, P, L]
};
PretrainBatch pretrain_batch(const SampleSet& set, const std::vector<std::int64_t>& idx, const MaskSpec& mask,
                             const InterchangeSpec& spec, std::int64_t patch_len);

/// Runs `steps` Adam updates on one fixed batch; returns the loss before each
/// step followed by the final loss (steps + 1 values). Dropout is disabled.
std::vector<double> overfit_one_batch(Stdae& model, const PretrainBatch& batch, std::int64_t steps, double lr);

struct ReconstructionError {
  double spatial = 0.0;
  double temporal = 0.0;
  double mean() const { return 0.5 * (spatial + temporal); }
};

/// Normalized-unit MAE of both branches on (a subset of) a split.
ReconstructionError reconstruction_error(Stdae& model, const SampleSet& set, const MaskSpec& mask,
                                         const InterchangeSpec& spec, std::int64_t max_samples = 0,
                                         std::int64_t batch_size = 32);

struct PretrainResult {
  Stdae model{nullptr};
  std::filesystem::path checkpoint_dir;
  std::vector<EpochLog> history;
  double best_val_loss = 0.0;
};

/// Trains both branches jointly on the reconstruction loss, keeping the
/// parameters with the lowest validation loss. Writes `stdae.pt`,
/// `config.json`, `normalizer.json` and `train_log.csv` under `out_dir`
/// (skipped when out_dir is empty).
PretrainResult pretrain(const PreparedData& data, const StdaeConfig& cfg, const TrainConfig& train,
                        const MaskSpec& mask, const std::filesystem::path& out_dir);

/// Frozen-encoder representations of every sample in a split, restricted to
/// the last T' patches: spatial and temporal, each [N, M, T', D].
struct Representations {
  torch::Tensor spatial;
  torch::Tensor temporal;
  bool empty() const { return !spatial.defined(); }
};
Representations compute_representations(Stdae& model, const SampleSet& set, const MaskSpec& mask,
                                        const InterchangeSpec& spec, std::int64_t last_patches,
                                        std::int64_t batch_size = 32);

struct DownstreamResult {
  Forecaster model{nullptr};
  std::filesystem::path checkpoint_dir;
  std::vector<EpochLog> history;
  double best_val_loss = 0.0;
};

struct DownstreamOptions {
  std::uint64_t seed = 0;
  /// Fusion MLPs held at zero (exact bare-predictor reduction).
  bool freeze_fusion_at_zero = false;
  /// Identifies the consumed pretraining checkpoint in the sidecar.
  std::string pretrain_id;
};

/// Trains backbone, fusion MLPs and head on forecast MAE with the encoders
/// frozen. `pretrained` may be null only when cfg.mode is kNone.
DownstreamResult train_downstream(const PreparedData& data, Stdae* pretrained, const ForecasterConfig& cfg,
                                  const TrainConfig& train, const MaskSpec& mask, const DownstreamOptions& options,
                                  const std::filesystem::path& out_dir);

void save_forecaster(Forecaster& model, const std::filesystem::path& dir, const Normalizer& normalizer,
                     const MaskSpec& mask, const std::string& pretrain_id);

struct LoadedForecaster {
  Forecaster model{nullptr};
  Normalizer normalizer;
  MaskSpec mask;
  std::string pretrain_id;
};
LoadedForecaster load_forecaster(const std::filesystem::path& dir, const InterchangeSpec& spec);

/// De-normalized forecasts and truths, both flattened [samples, S, M].
struct Predictions {
  std::vector<double> pred;
  std::vector<double> truth;
  std::int64_t samples = 0;
  std::int64_t horizon = 0;
};

Predictions predict(Forecaster& model, Stdae* pretrained, const SampleSet& set, const Normalizer& normalizer,
                    const MaskSpec& mask, const InterchangeSpec& spec, std::int64_t batch_size = 64);

MetricsReport evaluate(Forecaster& model, Stdae* pretrained, const SampleSet& set, const Normalizer& normalizer,
                       const MaskSpec& mask, const InterchangeSpec& spec,
                       const std::vector<std::int64_t>& horizon_steps = {3, 6, 12});

}  // namespace ramp_stdae
