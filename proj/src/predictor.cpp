#include "ramp_stdae/predictor.hpp"

#include "ramp_stdae/embedding.hpp"

namespace ramp_stdae {

namespace F = torch::nn::functional;

void PredictorConfig::validate() const {
  if (num_nodes <= 0 || channels <= 0 || input_len <= 0 || hidden <= 0 || horizon <= 0 || head_hidden <= 0) {
    throw ConfigError("predictor dimensions must be positive");
  }
  if (dilations.empty() || kernel < 1) throw ConfigError("predictor needs at least one block and kernel >= 1");
  for (auto d : dilations) {
    if (d < 1) throw ConfigError("dilations must be >= 1");
  }
}

nlohmann::json PredictorConfig::to_json() const {
  return {{"num_nodes", num_nodes}, {"channels", channels},       {"input_len", input_len},
          {"hidden", hidden},       {"dilations", dilations},     {"kernel", kernel},
          {"node_embed_dim", node_embed_dim}, {"horizon", horizon}, {"head_hidden", head_hidden},
          {"dropout", dropout}};
}

PredictorConfig PredictorConfig::from_json(const nlohmann::json& doc) {
  PredictorConfig c;
  c.num_nodes = doc.value("num_nodes", c.num_nodes);
  c.channels = doc.value("channels", c.channels);
  c.input_len = doc.value("input_len", c.input_len);
  c.hidden = doc.value("hidden", c.hidden);
  c.dilations = doc.value("dilations", c.dilations);
  c.kernel = doc.value("kernel", c.kernel);
  c.node_embed_dim = doc.value("node_embed_dim", c.node_embed_dim);
  c.horizon = doc.value("horizon", c.horizon);
  c.head_hidden = doc.value("head_hidden", c.head_hidden);
  c.dropout = doc.value("dropout", c.dropout);
  return c;
}

torch::Tensor normalized_support(const Adjacency& adj) {
  const auto m = adj.size();
  auto a = torch::zeros({m, m}, torch::kFloat32);
  auto acc = a.accessor<float, 2>();
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < m; ++j) acc[i][j] = adj(i, j) ? 1.0f : 0.0f;
  }
  a += torch::eye(m, torch::kFloat32);
  return a / a.sum(1, /*keepdim=*/true);
}

// --- backbone -------------------------------------------------------------------

GraphWaveNetImpl::GraphWaveNetImpl(const PredictorConfig& cfg, const Adjacency& adj) : cfg_(cfg) {
  cfg_.validate();
  if (adj.size() != cfg_.num_nodes) throw ShapeError("adjacency size does not match num_nodes");
  support_ = normalized_support(adj);
  const auto d = cfg_.hidden;
  start = register_module("start", torch::nn::Conv2d(torch::nn::Conv2dOptions(cfg_.channels, d, {1, 1})));
  filter_convs = register_module("filter_convs", torch::nn::ModuleList());
  gate_convs = register_module("gate_convs", torch::nn::ModuleList());
  graph_mixers = register_module("graph_mixers", torch::nn::ModuleList());
  skip_convs = register_module("skip_convs", torch::nn::ModuleList());
  for (auto dil : cfg_.dilations) {
    filter_convs->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(d, d, {1, cfg_.kernel}).dilation({1, dil})));
    gate_convs->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(d, d, {1, cfg_.kernel}).dilation({1, dil})));
    graph_mixers->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(3 * d, d, {1, 1})));
    skip_convs->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(d, d, {1, 1})));
  }
  source_embedding = register_parameter("source_embedding", torch::randn({cfg_.num_nodes, cfg_.node_embed_dim}));
  target_embedding = register_parameter("target_embedding", torch::randn({cfg_.num_nodes, cfg_.node_embed_dim}));
  drop = register_module("drop", torch::nn::Dropout(cfg_.dropout));
}

torch::Tensor GraphWaveNetImpl::adaptive_adjacency() const {
  return torch::softmax(torch::relu(torch::matmul(source_embedding, target_embedding.t())), 1);
}

torch::Tensor GraphWaveNetImpl::graph_conv(std::size_t block, const torch::Tensor& x, const torch::Tensor& adaptive) {
  // x: [B, D', M, T]; out[w] = sum_v A[w][v] x[v].
  const auto fixed = torch::einsum("bcvt,wv->bcwt", {x, support_.to(x.device())});
  const auto learned = torch::einsum("bcvt,wv->bcwt", {x, adaptive});
  return graph_mixers[block]->as<torch::nn::Conv2d>()->forward(torch::cat({x, fixed, learned}, 1));
}

torch::Tensor GraphWaveNetImpl::forward(const torch::Tensor& x_short) {
  if (x_short.dim() != 4 || x_short.size(1) != cfg_.input_len || x_short.size(2) != cfg_.num_nodes ||
      x_short.size(3) != cfg_.channels) {
    throw ShapeError("predictor expects [B, " + std::to_string(cfg_.input_len) + ", " + std::to_string(cfg_.num_nodes) +
                     ", " + std::to_string(cfg_.channels) + "]");
  }
  auto x = start(x_short.permute({0, 3, 2, 1}));  // [B, D', M, T]
  const auto adaptive = adaptive_adjacency();
  torch::Tensor skip;
  for (std::size_t i = 0; i < cfg_.dilations.size(); ++i) {
    const auto residual = x;
    const auto padded = F::pad(x, F::PadFuncOptions({cfg_.dilations[i] * (cfg_.kernel - 1), 0}));
    auto h = torch::tanh(filter_convs[i]->as<torch::nn::Conv2d>()->forward(padded)) *
             torch::sigmoid(gate_convs[i]->as<torch::nn::Conv2d>()->forward(padded));
    auto s = skip_convs[i]->as<torch::nn::Conv2d>()->forward(h);
    skip = skip.defined() ? skip + s : s;
    h = drop(graph_conv(i, h, adaptive));
    x = h + residual;
  }
  return torch::relu(skip).permute({0, 3, 2, 1});  // [B, T, M, D']
}

// --- fusion ---------------------------------------------------------------------

FusionMlpImpl::FusionMlpImpl(std::int64_t in_dim, std::int64_t hidden, std::int64_t out_dim) {
  fc1 = register_module("fc1", torch::nn::Linear(in_dim, hidden));
  fc2 = register_module("fc2", torch::nn::Linear(hidden, out_dim));
}

torch::Tensor FusionMlpImpl::forward(const torch::Tensor& x) { return fc2(torch::relu(fc1(x))); }

torch::Tensor extract_last_patches(const torch::Tensor& h, std::int64_t last_patches, std::int64_t patch_len,
                                   std::int64_t input_len) {
  if (h.dim() != 4) throw ShapeError("representation must be [B, M, P, D]");
  const auto p = h.size(2);
  if (last_patches <= 0 || last_patches > p) {
    throw std::out_of_range("T' = " + std::to_string(last_patches) + " exceeds the " + std::to_string(p) +
                            " available patches");
  }
  if (last_patches * patch_len < input_len) throw ShapeError("T' * L must cover the input length T");
  auto tail = h.slice(2, p - last_patches, p);                    // [B, M, T', D]
  auto steps = tail.repeat_interleave(patch_len, 2);              // [B, M, T'L, D]
  steps = steps.slice(2, steps.size(2) - input_len, steps.size(2));
  return steps.permute({0, 2, 1, 3});                             // [B, T, M, D]
}

torch::Tensor fuse(const torch::Tensor& spatial, const torch::Tensor& temporal, const torch::Tensor& hidden,
                   FusionMlp& spatial_mlp, FusionMlp& temporal_mlp) {
  auto out = hidden;
  if (spatial.defined() && !spatial_mlp.is_empty()) {
    auto s = spatial_mlp(spatial);
    if (!s.sizes().equals(hidden.sizes())) throw ShapeError("projected spatial representation does not match H(F)");
    out = out + s;
  }
  if (temporal.defined() && !temporal_mlp.is_empty()) {
    auto t = temporal_mlp(temporal);
    if (!t.sizes().equals(hidden.sizes())) throw ShapeError("projected temporal representation does not match H(F)");
    out = out + t;
  }
  return out;
}

OutputHeadImpl::OutputHeadImpl(std::int64_t input_len, std::int64_t hidden, std::int64_t head_hidden,
                               std::int64_t horizon) {
  fc1 = register_module("fc1", torch::nn::Linear(input_len * hidden, head_hidden));
  fc2 = register_module("fc2", torch::nn::Linear(head_hidden, horizon));
}

torch::Tensor OutputHeadImpl::forward(const torch::Tensor& h_aug) {
  const auto b = h_aug.size(0), t = h_aug.size(1), m = h_aug.size(2), d = h_aug.size(3);
  auto per_node = h_aug.permute({0, 2, 1, 3}).reshape({b, m, t * d});
  auto y = fc2(torch::relu(fc1(per_node)));  // [B, M, S]
  return y.permute({0, 2, 1}).unsqueeze(-1);
}

torch::Tensor denormalize_forecast(const torch::Tensor& normalized, const Normalizer* normalizer) {
  if (normalizer == nullptr || normalizer->empty()) throw ConfigError("forecast de-normalization needs a normalizer");
  return normalizer->denormalize_ramps(normalized.to(torch::kFloat64));
}

std::string to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::kNone:
      return "none";
    case FusionMode::kSpatial:
      return "sae";
    case FusionMode::kTemporal:
      return "tae";
    case FusionMode::kBoth:
      return "full";
  }
  return "?";
}

FusionMode fusion_mode_from_string(const std::string& s) {
  if (s == "none") return FusionMode::kNone;
  if (s == "sae") return FusionMode::kSpatial;
  if (s == "tae") return FusionMode::kTemporal;
  if (s == "full") return FusionMode::kBoth;
  throw ConfigError("unknown fusion mode '" + s + "' (expected full, sae, tae or none)");
}

nlohmann::json ForecasterConfig::to_json() const {
  return {{"predictor", predictor.to_json()}, {"mode", to_string(mode)},           {"stdae_dim", stdae_dim},
          {"fusion_hidden", fusion_hidden},   {"last_patches", last_patches}, {"patch_len", patch_len}};
}

ForecasterConfig ForecasterConfig::from_json(const nlohmann::json& doc) {
  ForecasterConfig c;
  if (doc.contains("predictor")) c.predictor = PredictorConfig::from_json(doc.at("predictor"));
  c.mode = fusion_mode_from_string(doc.value("mode", to_string(c.mode)));
  c.stdae_dim = doc.value("stdae_dim", c.stdae_dim);
  c.fusion_hidden = doc.value("fusion_hidden", c.fusion_hidden);
  c.last_patches = doc.value("last_patches", c.last_patches);
  c.patch_len = doc.value("patch_len", c.patch_len);
  return c;
}

ForecasterImpl::ForecasterImpl(const ForecasterConfig& cfg, const Adjacency& adj) : cfg_(cfg) {
  const auto& p = cfg_.predictor;
  backbone = register_module("backbone", GraphWaveNet(p, adj));
  head = register_module("head", OutputHead(p.input_len, p.hidden, p.head_hidden, p.horizon));
  if (cfg_.mode == FusionMode::kSpatial || cfg_.mode == FusionMode::kBoth) {
    spatial_mlp = register_module("spatial_mlp", FusionMlp(cfg_.stdae_dim, cfg_.fusion_hidden, p.hidden));
  }
  if (cfg_.mode == FusionMode::kTemporal || cfg_.mode == FusionMode::kBoth) {
    temporal_mlp = register_module("temporal_mlp", FusionMlp(cfg_.stdae_dim, cfg_.fusion_hidden, p.hidden));
  }
}

torch::Tensor ForecasterImpl::augmented(const torch::Tensor& x_short, const torch::Tensor& spatial_last,
                                        const torch::Tensor& temporal_last) {
  const auto hidden = backbone(x_short);
  const auto t = cfg_.predictor.input_len;
  torch::Tensor s, tm;
  if (!spatial_mlp.is_empty()) {
    if (!spatial_last.defined()) throw ConfigError("forecaster mode needs the spatial representation");
    s = extract_last_patches(spatial_last, cfg_.last_patches, cfg_.patch_len, t);
  }
  if (!temporal_mlp.is_empty()) {
    if (!temporal_last.defined()) throw ConfigError("forecaster mode needs the temporal representation");
    tm = extract_last_patches(temporal_last, cfg_.last_patches, cfg_.patch_len, t);
  }
  return fuse(s, tm, hidden, spatial_mlp, temporal_mlp);
}

torch::Tensor ForecasterImpl::forward(const torch::Tensor& x_short, const torch::Tensor& spatial_last,
                                      const torch::Tensor& temporal_last) {
  return head(augmented(x_short, spatial_last, temporal_last));
}

void ForecasterImpl::freeze_fusion_at_zero() {
  torch::NoGradGuard guard;
  for (auto* mlp : {&spatial_mlp, &temporal_mlp}) {
    if (mlp->is_empty()) continue;
    for (auto& p : (*mlp)->parameters()) {
      p.zero_();
      p.set_requires_grad(false);
    }
  }
}

std::vector<torch::Tensor> ForecasterImpl::trainable_parameters() {
  std::vector<torch::Tensor> out;
  for (auto& p : parameters()) {
    if (p.requires_grad()) out.push_back(p);
  }
  return out;
}

}  // namespace ramp_stdae
