#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "ramp_stdae/embedding.hpp"

namespace ramp_stdae {

/// Hyperparameters of the pretraining model. Serialized as the checkpoint
/// sidecar `config.json`.
struct StdaeConfig {
  std::int64_t num_nodes = 12;  // M
  std::int64_t channels = 8;    // C
  std::int64_t t_long = 288;
  std::int64_t patch_len = 12;
  std::int64_t embed_dim = 96;
  std::int64_t n_encoder_layers = 4;
  std::int64_t n_decoder_layers = 1;
  std::int64_t heads = 4;
  std::int64_t ff_mult = 4;
  double dropout = 0.1;
  std::uint64_t seed = 0;

  std::int64_t num_patches() const { return t_long / patch_len; }
  PatchConfig patch_config() const { return {patch_len, embed_dim, t_long, channels}; }
  void validate() const;

  nlohmann::json to_json() const;
  static StdaeConfig from_json(const nlohmann::json& doc);
};

/// Pre-norm transformer block over [batch, tokens, D]:
///   x + Dropout(MHA(LN(x))), then x + Dropout(FFN(LN(x))).
class TransformerLayerImpl : public torch::nn::Module {
 public:
  TransformerLayerImpl(std::int64_t dim, std::int64_t heads, std::int64_t ff_dim, double dropout);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::Tensor attend(const torch::Tensor& x);

  std::int64_t dim_;
  std::int64_t heads_;
  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr};
  torch::nn::Linear qkv{nullptr}, out{nullptr}, ff1{nullptr}, ff2{nullptr};
  torch::nn::Dropout drop{nullptr};
};
TORCH_MODULE(TransformerLayer);

class TransformerStackImpl : public torch::nn::Module {
 public:
  TransformerStackImpl(std::int64_t layers, std::int64_t dim, std::int64_t heads, std::int64_t ff_dim, double dropout);
  torch::Tensor forward(torch::Tensor x);

 private:
  torch::nn::ModuleList layers_;
};
TORCH_MODULE(TransformerStack);

enum class Axis { kSpatial, kTemporal };

/// One autoencoder branch. The spatial branch attends across nodes (M) within
/// each patch; the temporal branch attends across patches (P) within each node.
class AutoencoderBranchImpl : public torch::nn::Module {
 public:
  AutoencoderBranchImpl(const StdaeConfig& cfg, Axis axis);

  /// E [B, M, P, D] -> H [B, M, P, D].
  torch::Tensor encode(const torch::Tensor& e);
  /// H [B, M, P, D] -> reconstruction [B, M, P, L].
  torch::Tensor decode(const torch::Tensor& h);

  Axis axis() const { return axis_; }

 private:
  // Runs `stack` with attention along this branch's axis.
  torch::Tensor along_axis(TransformerStack& stack, const torch::Tensor& x) const;

  Axis axis_;
  std::int64_t dim_;
  TransformerStack encoder{nullptr}, decoder{nullptr};
  torch::nn::LayerNorm encoder_norm{nullptr}, decoder_norm{nullptr};
  torch::nn::Linear decoder_input{nullptr}, output{nullptr};
};
TORCH_MODULE(AutoencoderBranch);

struct StdaeOutput {
  torch::Tensor spatial;         // H(S) [B, M, P, D]
  torch::Tensor temporal;        // H(T) [B, M, P, D]
  torch::Tensor spatial_recon;   // [B, M, P, L]
  torch::Tensor temporal_recon;  // [B, M, P, L]
};

/// Shared patch embedding feeding parallel spatial and temporal autoencoders.
class StdaeImpl : public torch::nn::Module {
 public:
  explicit StdaeImpl(const StdaeConfig& cfg);

  /// Patchify and embed a (masked, normalized) long window [B, T_long, M, C].
  torch::Tensor embed(const torch::Tensor& long_window);

  StdaeOutput forward(const torch::Tensor& long_window);

  /// Encoder representations restricted to the last `last_patches` patches,
  /// each [B, M, last_patches, D]. Equal to slicing forward()'s outputs.
  std::pair<torch::Tensor, torch::Tensor> encode_last(const torch::Tensor& long_window, std::int64_t last_patches);

  const StdaeConfig& config() const { return cfg_; }

  PatchEmbedding embedding{nullptr};
  AutoencoderBranch sae{nullptr};
  AutoencoderBranch tae{nullptr};

 private:
  StdaeConfig cfg_;
};
TORCH_MODULE(Stdae);

/// MAE(spatial, target) + MAE(temporal, target); all [.., M, P, L].
torch::Tensor reconstruction_loss(const torch::Tensor& spatial, const torch::Tensor& temporal,
                                  const torch::Tensor& target);

/// Ramp window [B, T_long, M, 1] -> patch targets [B, M, P, L].
torch::Tensor ramp_patches(const torch::Tensor& ramps, std::int64_t patch_len);

/// Checkpoint directory: `stdae.pt` parameters plus the `config.json` sidecar.
void save_stdae(Stdae& model, const std::filesystem::path& dir);

/// Loads a checkpoint after checking the sidecar against the expected data
/// dimensions (any value <= 0 is not checked). The model comes back in eval mode.
Stdae load_stdae(const std::filesystem::path& dir, std::int64_t expect_nodes = 0, std::int64_t expect_channels = 0,
                 std::int64_t expect_t_long = 0);

/// FNV-1a hash of a file's bytes, hex encoded. Identifies checkpoints.
std::string file_fingerprint(const std::filesystem::path& path);

}  // namespace ramp_stdae
