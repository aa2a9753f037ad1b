#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "ramp_stdae/dataset.hpp"
#include "ramp_stdae/topology.hpp"

namespace ramp_stdae {

struct PredictorConfig {
  std::int64_t num_nodes = 12;   // M
  std::int64_t channels = 8;     // C
  std::int64_t input_len = 12;   // T
  std::int64_t hidden = 32;      // D'
  std::vector<std::int64_t> dilations{1, 2, 1, 2};
  std::int64_t kernel = 2;
  std::int64_t node_embed_dim = 10;
  std::int64_t horizon = 12;     // S
  std::int64_t head_hidden = 256;
  double dropout = 0.0;

  void validate() const;
  nlohmann::json to_json() const;
  static PredictorConfig from_json(const nlohmann::json& doc);
};

/// Row-normalized (A + I) as a float tensor.
torch::Tensor normalized_support(const Adjacency& adj);

/// Compact graph-temporal backbone: gated dilated causal convolutions along
/// time, each followed by a graph convolution over the fixed support and a
/// learned adaptive adjacency, with residual and skip paths. The time axis
/// keeps its length T, so the hidden field is [B, T, M, D'].
class GraphWaveNetImpl : public torch::nn::Module {
 public:
  GraphWaveNetImpl(const PredictorConfig& cfg, const Adjacency& adj);

  /// x_short [B, T, M, C] -> H(F) [B, T, M, D'].
  torch::Tensor forward(const torch::Tensor& x_short);

  torch::Tensor adaptive_adjacency() const;

  /// Fixed support used by the graph convolutions (not a parameter).
  const torch::Tensor& support() const { return support_; }
  void set_support(torch::Tensor support) { support_ = std::move(support); }

  /// Node-embedding parameters of the adaptive adjacency, [M, node_embed_dim] each.
  torch::Tensor source_embedding, target_embedding;

 private:
  torch::Tensor graph_conv(std::size_t block, const torch::Tensor& x, const torch::Tensor& adaptive);

  PredictorConfig cfg_;
  torch::Tensor support_;
  torch::nn::Conv2d start{nullptr};
  torch::nn::ModuleList filter_convs, gate_convs, graph_mixers, skip_convs;
  torch::nn::Dropout drop{nullptr};
};
TORCH_MODULE(GraphWaveNet);

/// Two-layer perceptron D -> hidden -> D' with a rectifier.
class FusionMlpImpl : public torch::nn::Module {
 public:
  FusionMlpImpl(std::int64_t in_dim, std::int64_t hidden, std::int64_t out_dim);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(FusionMlp);

/// [B, M, P, D] -> [B, T, M, D]: keep the last `last_patches` patches, expand
/// each to `patch_len` steps and keep the final T steps. With one patch of
/// length T this replicates the last patch along time.
torch::Tensor extract_last_patches(const torch::Tensor& h, std::int64_t last_patches, std::int64_t patch_len,
                                   std::int64_t input_len);

/// H(Aug) = MLP_s(Hs') + MLP_t(Ht') + H(F). Either representation may be
/// undefined, in which case its term is dropped.
torch::Tensor fuse(const torch::Tensor& spatial, const torch::Tensor& temporal, const torch::Tensor& hidden,
                   FusionMlp& spatial_mlp, FusionMlp& temporal_mlp);

/// Collapses (T, D') per node into S normalized forecasts: [B, T, M, D'] -> [B, S, M, 1].
class OutputHeadImpl : public torch::nn::Module {
 public:
  OutputHeadImpl(std::int64_t input_len, std::int64_t hidden, std::int64_t head_hidden, std::int64_t horizon);
  torch::Tensor forward(const torch::Tensor& h_aug);

 private:
  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(OutputHead);

/// De-normalized forecast [B, S, M, 1] in vehicles/interval.
torch::Tensor denormalize_forecast(const torch::Tensor& normalized, const Normalizer* normalizer);

/// Which pretrained representations reach the fusion point.
enum class FusionMode { kNone, kSpatial, kTemporal, kBoth };
std::string to_string(FusionMode mode);
FusionMode fusion_mode_from_string(const std::string& s);

struct ForecasterConfig {
  PredictorConfig predictor;
  FusionMode mode = FusionMode::kBoth;
  std::int64_t stdae_dim = 96;     // D
  std::int64_t fusion_hidden = 96;
  std::int64_t last_patches = 1;   // T'
  std::int64_t patch_len = 12;     // L

  nlohmann::json to_json() const;
  static ForecasterConfig from_json(const nlohmann::json& doc);
};

/// Backbone + optional fusion of frozen pretrained representations + head.
/// Backbone and head are constructed before the fusion MLPs, so under the same
/// seed every mode initializes the shared parts identically.
class ForecasterImpl : public torch::nn::Module {
 public:
  ForecasterImpl(const ForecasterConfig& cfg, const Adjacency& adj);

  /// Hidden field before the head; representations are [B, M, T', D] and
  /// may be undefined when the mode does not use them.
  torch::Tensor augmented(const torch::Tensor& x_short, const torch::Tensor& spatial_last,
                          const torch::Tensor& temporal_last);

  /// Normalized forecast [B, S, M, 1].
  torch::Tensor forward(const torch::Tensor& x_short, const torch::Tensor& spatial_last = {},
                        const torch::Tensor& temporal_last = {});

  /// Zeroes the fusion MLPs and excludes them from training.
  void freeze_fusion_at_zero();

  std::vector<torch::Tensor> trainable_parameters();

  const ForecasterConfig& config() const { return cfg_; }

  GraphWaveNet backbone{nullptr};
  OutputHead head{nullptr};
  FusionMlp spatial_mlp{nullptr}, temporal_mlp{nullptr};

 private:
  ForecasterConfig cfg_;
};
TORCH_MODULE(Forecaster);

}  // namespace ramp_stdae
