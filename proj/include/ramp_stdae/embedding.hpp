#pragma once

#include <cstdint>
#include <stdexcept>

#include <torch/torch.h>

namespace ramp_stdae {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PatchConfig {
  std::int64_t patch_len = 12;   // L
  std::int64_t embed_dim = 96;   // D
  std::int64_t long_len = 288;   // T_long
  std::int64_t channels = 8;     // C

  std::int64_t num_patches() const { return long_len / patch_len; }
  void validate() const;
};

/// [T_long, M, C] or [B, T_long, M, C] -> [M, P, L*C] or [B, M, P, L*C].
/// Inside a patch the flattening order is (step, channel).
torch::Tensor patchify(const torch::Tensor& x, std::int64_t patch_len);

/// Inverse of patchify; `channels` is C.
torch::Tensor unpatchify(const torch::Tensor& z, std::int64_t channels);

/// Parameter-free 2D sinusoidal table [M, P, D] in float64. Channels [0, D/2)
/// encode the patch index, [D/2, D) the node index; each half interleaves
/// sin/cos pairs at frequencies 10000^(-2k / (D/2)).
torch::Tensor positional_encoding_2d(std::int64_t nodes, std::int64_t patches, std::int64_t dim);

/// Linear(L*C -> D), LayerNorm, then the 2D positional table.
class PatchEmbeddingImpl : public torch::nn::Module {
 public:
  PatchEmbeddingImpl(const PatchConfig& cfg, std::int64_t nodes);

  /// z: [B, M, P, L*C] -> E: [B, M, P, D].
  torch::Tensor forward(const torch::Tensor& z);

  /// Table used by forward, recomputed from the config (never serialized).
  const torch::Tensor& position_table() const { return pe_; }

  torch::nn::Linear projection{nullptr};
  torch::nn::LayerNorm norm{nullptr};

 private:
  PatchConfig cfg_;
  std::int64_t nodes_;
  torch::Tensor pe_;
};
TORCH_MODULE(PatchEmbedding);

}  // namespace ramp_stdae
