#include "ramp_stdae/embedding.hpp"

#include <cmath>
#include <string>

namespace ramp_stdae {

void PatchConfig::validate() const {
  if (patch_len <= 0 || long_len <= 0 || long_len % patch_len != 0) {
    throw ShapeError("T_long (" + std::to_string(long_len) + ") must be a positive multiple of the patch length (" +
                     std::to_string(patch_len) + ")");
  }
  if (embed_dim <= 0 || embed_dim % 4 != 0) {
    throw ShapeError("embedding dimension must be divisible by 4, got " + std::to_string(embed_dim));
  }
  if (channels <= 0) throw ShapeError("channel count must be positive");
}

torch::Tensor patchify(const torch::Tensor& x, std::int64_t patch_len) {
  if (x.dim() == 3) return patchify(x.unsqueeze(0), patch_len).squeeze(0);
  if (x.dim() != 4) throw ShapeError("patchify expects [T_long, M, C] or [B, T_long, M, C]");
  const auto b = x.size(0), t = x.size(1), m = x.size(2), c = x.size(3);
  if (patch_len <= 0 || t % patch_len != 0) {
    throw ShapeError("window length " + std::to_string(t) + " is not divisible by patch length " +
                     std::to_string(patch_len));
  }
  return x.permute({0, 2, 1, 3}).reshape({b, m, t / patch_len, patch_len * c});
}

torch::Tensor unpatchify(const torch::Tensor& z, std::int64_t channels) {
  if (z.dim() == 3) return unpatchify(z.unsqueeze(0), channels).squeeze(0);
  if (z.dim() != 4 || channels <= 0 || z.size(3) % channels != 0) throw ShapeError("unpatchify: bad shape");
  const auto b = z.size(0), m = z.size(1), p = z.size(2), l = z.size(3) / channels;
  return z.reshape({b, m, p * l, channels}).permute({0, 2, 1, 3}).contiguous();
}

torch::Tensor positional_encoding_2d(std::int64_t nodes, std::int64_t patches, std::int64_t dim) {
  if (dim <= 0 || dim % 4 != 0) throw ShapeError("2D positional encoding needs D divisible by 4, got " + std::to_string(dim));
  const auto half = dim / 2;
  auto table = torch::zeros({nodes, patches, dim}, torch::kFloat64);
  auto acc = table.accessor<double, 3>();
  for (std::int64_t k = 0; k < half / 2; ++k) {
    const double freq = std::pow(10000.0, -2.0 * static_cast<double>(k) / static_cast<double>(half));
    for (std::int64_t n = 0; n < nodes; ++n) {
      for (std::int64_t p = 0; p < patches; ++p) {
        acc[n][p][2 * k] = std::sin(static_cast<double>(p) * freq);
        acc[n][p][2 * k + 1] = std::cos(static_cast<double>(p) * freq);
        acc[n][p][half + 2 * k] = std::sin(static_cast<double>(n) * freq);
        acc[n][p][half + 2 * k + 1] = std::cos(static_cast<double>(n) * freq);
      }
    }
  }
  return table;
}

PatchEmbeddingImpl::PatchEmbeddingImpl(const PatchConfig& cfg, std::int64_t nodes) : cfg_(cfg), nodes_(nodes) {
  cfg_.validate();
  projection = register_module("projection", torch::nn::Linear(cfg_.patch_len * cfg_.channels, cfg_.embed_dim));
  norm = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({cfg_.embed_dim})));
  pe_ = positional_encoding_2d(nodes_, cfg_.num_patches(), cfg_.embed_dim).to(torch::kFloat32);
}

torch::Tensor PatchEmbeddingImpl::forward(const torch::Tensor& z) {
  if (z.dim() != 4 || z.size(1) != nodes_ || z.size(2) != cfg_.num_patches() ||
      z.size(3) != cfg_.patch_len * cfg_.channels) {
    throw ShapeError("patch embedding expects [B, " + std::to_string(nodes_) + ", " +
                     std::to_string(cfg_.num_patches()) + ", " + std::to_string(cfg_.patch_len * cfg_.channels) + "]");
  }
  return norm(projection(z)) + pe_.to(z.device());
}

}  // namespace ramp_stdae
