#include "ramp_stdae/stdae.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ramp_stdae/topology.hpp"

namespace ramp_stdae {

// --- config ---------------------------------------------------------------------

void StdaeConfig::validate() const {
  patch_config().validate();
  if (num_nodes <= 0) throw ConfigError("num_nodes must be positive");
  if (heads <= 0 || embed_dim % heads != 0) throw ConfigError("embed_dim must be divisible by heads");
  if (n_encoder_layers <= 0 || n_decoder_layers <= 0) throw ConfigError("encoder and decoder need at least one layer");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
}

nlohmann::json StdaeConfig::to_json() const {
  return {{"num_nodes", num_nodes},
          {"channels", channels},
          {"t_long", t_long},
          {"patch_len", patch_len},
          {"embed_dim", embed_dim},
          {"n_encoder_layers", n_encoder_layers},
          {"n_decoder_layers", n_decoder_layers},
          {"heads", heads},
          {"ff_mult", ff_mult},
          {"dropout", dropout},
          {"seed", seed}};
}

StdaeConfig StdaeConfig::from_json(const nlohmann::json& doc) {
  StdaeConfig c;
  c.num_nodes = doc.value("num_nodes", c.num_nodes);
  c.channels = doc.value("channels", c.channels);
  c.t_long = doc.value("t_long", c.t_long);
  c.patch_len = doc.value("patch_len", c.patch_len);
  c.embed_dim = doc.value("embed_dim", c.embed_dim);
  c.n_encoder_layers = doc.value("n_encoder_layers", c.n_encoder_layers);
  c.n_decoder_layers = doc.value("n_decoder_layers", c.n_decoder_layers);
  c.heads = doc.value("heads", c.heads);
  c.ff_mult = doc.value("ff_mult", c.ff_mult);
  c.dropout = doc.value("dropout", c.dropout);
  c.seed = doc.value("seed", c.seed);
  return c;
}

// --- transformer ----------------------------------------------------------------

TransformerLayerImpl::TransformerLayerImpl(std::int64_t dim, std::int64_t heads, std::int64_t ff_dim, double dropout)
    : dim_(dim), heads_(heads) {
  norm1 = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  norm2 = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  qkv = register_module("qkv", torch::nn::Linear(dim, 3 * dim));
  out = register_module("out", torch::nn::Linear(dim, dim));
  ff1 = register_module("ff1", torch::nn::Linear(dim, ff_dim));
  ff2 = register_module("ff2", torch::nn::Linear(ff_dim, dim));
  drop = register_module("drop", torch::nn::Dropout(dropout));
}

torch::Tensor TransformerLayerImpl::attend(const torch::Tensor& x) {
  const auto batch = x.size(0), tokens = x.size(1);
  const auto head_dim = dim_ / heads_;
  auto parts = qkv(x).view({batch, tokens, 3, heads_, head_dim}).permute({2, 0, 3, 1, 4});
  const auto q = parts[0], k = parts[1], v = parts[2];
  auto scores = torch::matmul(q, k.transpose(-2, -1)) / std::sqrt(static_cast<double>(head_dim));
  auto ctx = torch::matmul(torch::softmax(scores, -1), v);
  return out(ctx.permute({0, 2, 1, 3}).reshape({batch, tokens, dim_}));
}

torch::Tensor TransformerLayerImpl::forward(const torch::Tensor& x) {
  auto h = x + drop(attend(norm1(x)));
  return h + drop(ff2(drop(torch::gelu(ff1(norm2(h))))));
}

TransformerStackImpl::TransformerStackImpl(std::int64_t layers, std::int64_t dim, std::int64_t heads,
                                           std::int64_t ff_dim, double dropout) {
  layers_ = register_module("layers", torch::nn::ModuleList());
  for (std::int64_t i = 0; i < layers; ++i) layers_->push_back(TransformerLayer(dim, heads, ff_dim, dropout));
}

torch::Tensor TransformerStackImpl::forward(torch::Tensor x) {
  for (const auto& layer : *layers_) x = layer->as<TransformerLayer>()->forward(x);
  return x;
}

// --- autoencoder branches -------------------------------------------------------

AutoencoderBranchImpl::AutoencoderBranchImpl(const StdaeConfig& cfg, Axis axis) : axis_(axis), dim_(cfg.embed_dim) {
  const auto ff = cfg.ff_mult * cfg.embed_dim;
  encoder = register_module("encoder", TransformerStack(cfg.n_encoder_layers, dim_, cfg.heads, ff, cfg.dropout));
  encoder_norm = register_module("encoder_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim_})));
  decoder_input = register_module("decoder_input", torch::nn::Linear(dim_, dim_));
  decoder = register_module("decoder", TransformerStack(cfg.n_decoder_layers, dim_, cfg.heads, ff, cfg.dropout));
  decoder_norm = register_module("decoder_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim_})));
  output = register_module("output", torch::nn::Linear(dim_, cfg.patch_len));
}

torch::Tensor AutoencoderBranchImpl::along_axis(TransformerStack& stack, const torch::Tensor& x) const {
  const auto b = x.size(0), m = x.size(1), p = x.size(2), d = x.size(3);
  if (axis_ == Axis::kTemporal) {
    return stack->forward(x.reshape({b * m, p, d})).view({b, m, p, d});
  }
  // Swap node and patch axes so the token axis is M.
  auto swapped = x.transpose(1, 2).reshape({b * p, m, d});
  return stack->forward(swapped).view({b, p, m, d}).transpose(1, 2);
}

torch::Tensor AutoencoderBranchImpl::encode(const torch::Tensor& e) {
  if (e.dim() != 4 || e.size(3) != dim_) throw ShapeError("encoder expects [B, M, P, D]");
  return encoder_norm(along_axis(encoder, e));
}

torch::Tensor AutoencoderBranchImpl::decode(const torch::Tensor& h) {
  if (h.dim() != 4 || h.size(3) != dim_) throw ShapeError("decoder expects [B, M, P, D]");
  return output(decoder_norm(along_axis(decoder, decoder_input(h))));
}

// --- STDAE ----------------------------------------------------------------------

StdaeImpl::StdaeImpl(const StdaeConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  embedding = register_module("embedding", PatchEmbedding(cfg_.patch_config(), cfg_.num_nodes));
  sae = register_module("sae", AutoencoderBranch(cfg_, Axis::kSpatial));
  tae = register_module("tae", AutoencoderBranch(cfg_, Axis::kTemporal));
}

torch::Tensor StdaeImpl::embed(const torch::Tensor& long_window) {
  if (long_window.dim() != 4 || long_window.size(1) != cfg_.t_long || long_window.size(2) != cfg_.num_nodes ||
      long_window.size(3) != cfg_.channels) {
    throw ShapeError("STDAE expects a long window [B, " + std::to_string(cfg_.t_long) + ", " +
                     std::to_string(cfg_.num_nodes) + ", " + std::to_string(cfg_.channels) + "]");
  }
  return embedding(patchify(long_window, cfg_.patch_len));
}

StdaeOutput StdaeImpl::forward(const torch::Tensor& long_window) {
  const auto e = embed(long_window);
  StdaeOutput out;
  out.spatial = sae->encode(e);
  out.temporal = tae->encode(e);
  out.spatial_recon = sae->decode(out.spatial);
  out.temporal_recon = tae->decode(out.temporal);
  return out;
}

std::pair<torch::Tensor, torch::Tensor> StdaeImpl::encode_last(const torch::Tensor& long_window,
                                                               std::int64_t last_patches) {
  const auto p = cfg_.num_patches();
  if (last_patches <= 0 || last_patches > p) throw ShapeError("cannot take the last " + std::to_string(last_patches) +
                                                              " of " + std::to_string(p) + " patches");
  const auto e = embed(long_window);
  // The spatial encoder never mixes patches, so it only needs the tail.
  auto spatial = sae->encode(e.slice(2, p - last_patches, p));
  auto temporal = tae->encode(e).slice(2, p - last_patches, p);
  return {spatial, temporal};
}

torch::Tensor reconstruction_loss(const torch::Tensor& spatial, const torch::Tensor& temporal,
                                  const torch::Tensor& target) {
  if (!spatial.sizes().equals(target.sizes()) || !temporal.sizes().equals(target.sizes())) {
    throw ShapeError("reconstruction and target shapes differ");
  }
  return (spatial - target).abs().mean() + (temporal - target).abs().mean();
}

torch::Tensor ramp_patches(const torch::Tensor& ramps, std::int64_t patch_len) {
  if (ramps.dim() == 3) return ramp_patches(ramps.unsqueeze(0), patch_len).squeeze(0);
  if (ramps.dim() != 4 || ramps.size(3) != 1) throw ShapeError("ramp window must be [B, T_long, M, 1]");
  return patchify(ramps, patch_len);
}

// --- checkpoints ----------------------------------------------------------------

std::string file_fingerprint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void save_stdae(Stdae& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  torch::save(model, (dir / "stdae.pt").string());
  std::ofstream out(dir / "config.json");
  out << model->config().to_json().dump(2) << '\n';
}

Stdae load_stdae(const std::filesystem::path& dir, std::int64_t expect_nodes, std::int64_t expect_channels,
                 std::int64_t expect_t_long) {
  std::ifstream in(dir / "config.json");
  if (!in) throw ConfigError("checkpoint '" + dir.string() + "' has no config.json");
  const auto cfg = StdaeConfig::from_json(nlohmann::json::parse(in));
  const auto check = [&](const char* what, std::int64_t expected, std::int64_t actual) {
    if (expected > 0 && expected != actual) {
      throw ConfigError(std::string("checkpoint ") + what + " is " + std::to_string(actual) + ", data needs " +
                        std::to_string(expected));
    }
  };
  check("num_nodes", expect_nodes, cfg.num_nodes);
  check("channels", expect_channels, cfg.channels);
  check("t_long", expect_t_long, cfg.t_long);
  Stdae model(cfg);
  torch::load(model, (dir / "stdae.pt").string());
  model->eval();
  return model;
}

}  // namespace ramp_stdae
