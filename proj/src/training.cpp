#include "ramp_stdae/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace ramp_stdae {

namespace {

using Clock = std::chrono::steady_clock;

std::vector<torch::Tensor> snapshot(torch::nn::Module& module) {
  std::vector<torch::Tensor> out;
  for (const auto& p : module.parameters()) out.push_back(p.detach().clone());
  return out;
}

void restore(torch::nn::Module& module, const std::vector<torch::Tensor>& saved) {
  torch::NoGradGuard guard;
  auto params = module.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i].copy_(saved[i]);
}

void set_learning_rate(torch::optim::Adam& opt, double lr) {
  for (auto& group : opt.param_groups()) static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
}

double epoch_learning_rate(const TrainConfig& cfg, std::int64_t epoch) {
  if (!cfg.cosine_decay) return cfg.learning_rate;
  return 0.5 * cfg.learning_rate *
         (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(cfg.max_epochs)));
}

std::vector<std::vector<std::int64_t>> shuffled_batches(std::int64_t n, std::int64_t batch, std::int64_t max_batches,
                                                        std::mt19937_64& rng) {
  std::vector<std::int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::int64_t>> out;
  for (std::int64_t i = 0; i < n; i += batch) {
    out.emplace_back(order.begin() + i, order.begin() + std::min(n, i + batch));
    if (max_batches > 0 && static_cast<std::int64_t>(out.size()) == max_batches) break;
  }
  return out;
}

torch::Tensor gather_rows(const torch::Tensor& t, const std::vector<std::int64_t>& idx) {
  if (!t.defined()) return {};
  return t.index_select(0, torch::tensor(idx, torch::kLong));
}

}  // namespace

// --- config ---------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size <= 0 || max_epochs <= 0 || patience <= 0) throw ConfigError("batch size, epochs and patience must be positive");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"max_epochs", max_epochs},
          {"patience", patience},
          {"seeds", seeds},
          {"cosine_decay", cosine_decay},
          {"grad_clip", grad_clip},
          {"max_batches_per_epoch", max_batches_per_epoch},
          {"max_eval_samples", max_eval_samples}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc) {
  TrainConfig c;
  c.learning_rate = doc.value("learning_rate", c.learning_rate);
  c.batch_size = doc.value("batch_size", c.batch_size);
  c.max_epochs = doc.value("max_epochs", c.max_epochs);
  c.patience = doc.value("patience", c.patience);
  c.seeds = doc.value("seeds", c.seeds);
  c.cosine_decay = doc.value("cosine_decay", c.cosine_decay);
  c.grad_clip = doc.value("grad_clip", c.grad_clip);
  c.max_batches_per_epoch = doc.value("max_batches_per_epoch", c.max_batches_per_epoch);
  c.max_eval_samples = doc.value("max_eval_samples", c.max_eval_samples);
  return c;
}

void write_epoch_log(const std::filesystem::path& path, const std::vector<EpochLog>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "epoch,train_loss,val_loss,wall_sec\n";
  out.precision(10);
  for (const auto& e : history) out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.wall_sec << '\n';
}

std::vector<std::int64_t> evaluation_indices(std::int64_t n, std::int64_t limit) {
  std::vector<std::int64_t> out;
  if (limit <= 0 || n <= limit) {
    out.resize(n);
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  for (std::int64_t i = 0; i < limit; ++i) out.push_back(i * n / limit);
  return out;
}

// --- pretraining ----------------------------------------------------------------

PretrainBatch pretrain_batch(const SampleSet& set, const std::vector<std::int64_t>& idx, const MaskSpec& mask,
                             const InterchangeSpec& spec, std::int64_t patch_len) {
  return {apply_mask(set.long_inputs(idx), mask, spec).values, ramp_patches(set.long_ramps(idx), patch_len)};
}

std::vector<double> overfit_one_batch(Stdae& model, const PretrainBatch& batch, std::int64_t steps, double lr) {
  model->eval();
  torch::optim::Adam opt(model->parameters(), torch::optim::AdamOptions(lr));
  std::vector<double> losses;
  for (std::int64_t s = 0; s <= steps; ++s) {
    opt.zero_grad();
    auto out = model->forward(batch.long_inputs);
    auto loss = reconstruction_loss(out.spatial_recon, out.temporal_recon, batch.targets);
    losses.push_back(loss.item<double>());
    if (s == steps) break;
    loss.backward();
    opt.step();
  }
  return losses;
}

ReconstructionError reconstruction_error(Stdae& model, const SampleSet& set, const MaskSpec& mask,
                                         const InterchangeSpec& spec, std::int64_t max_samples,
                                         std::int64_t batch_size) {
  torch::NoGradGuard guard;
  const bool was_training = model->is_training();
  model->eval();
  const auto idx = evaluation_indices(set.size(), max_samples);
  double spatial = 0.0, temporal = 0.0;
  for (std::size_t i = 0; i < idx.size(); i += batch_size) {
    std::vector<std::int64_t> part(idx.begin() + i, idx.begin() + std::min(idx.size(), i + batch_size));
    const auto batch = pretrain_batch(set, part, mask, spec, model->config().patch_len);
    const auto out = model->forward(batch.long_inputs);
    const auto w = static_cast<double>(part.size());
    spatial += (out.spatial_recon - batch.targets).abs().mean().item<double>() * w;
    temporal += (out.temporal_recon - batch.targets).abs().mean().item<double>() * w;
  }
  model->train(was_training);
  const auto n = static_cast<double>(idx.size());
  return {spatial / n, temporal / n};
}

PretrainResult pretrain(const PreparedData& data, const StdaeConfig& cfg, const TrainConfig& train,
                        const MaskSpec& mask, const std::filesystem::path& out_dir) {
  train.validate();
  mask.validate(data.spec);
  if (cfg.num_nodes != data.spec.num_movements() || cfg.t_long != data.windows.long_len ||
      cfg.channels != data.train.channels()) {
    throw ConfigError("STDAE config does not match the dataset dimensions");
  }
  torch::manual_seed(cfg.seed);
  PretrainResult result;
  result.model = Stdae(cfg);
  auto& model = result.model;
  torch::optim::Adam opt(model->parameters(), torch::optim::AdamOptions(train.learning_rate));
  std::mt19937_64 rng(cfg.seed);

  auto best = snapshot(*model);
  double best_val = std::numeric_limits<double>::infinity();
  std::int64_t stale = 0;
  const auto start = Clock::now();
  bool diverged = false;

  for (std::int64_t epoch = 1; epoch <= train.max_epochs && !diverged; ++epoch) {
    set_learning_rate(opt, epoch_learning_rate(train, epoch - 1));
    model->train();
    double total = 0.0;
    std::int64_t count = 0;
    for (const auto& idx : shuffled_batches(data.train.size(), train.batch_size, train.max_batches_per_epoch, rng)) {
      const auto batch = pretrain_batch(data.train, idx, mask, data.spec, cfg.patch_len);
      opt.zero_grad();
      const auto out = model->forward(batch.long_inputs);
      auto loss = reconstruction_loss(out.spatial_recon, out.temporal_recon, batch.targets);
      const double value = loss.item<double>();
      if (!std::isfinite(value)) {
        diverged = true;
        break;
      }
      loss.backward();
      if (train.grad_clip > 0) torch::nn::utils::clip_grad_norm_(model->parameters(), train.grad_clip);
      opt.step();
      total += value * static_cast<double>(idx.size());
      count += static_cast<std::int64_t>(idx.size());
    }
    if (diverged) break;
    const auto val = reconstruction_error(model, data.val, mask, data.spec, train.max_eval_samples);
    const double val_loss = val.spatial + val.temporal;
    result.history.push_back({epoch, total / static_cast<double>(std::max<std::int64_t>(count, 1)), val_loss,
                              std::chrono::duration<double>(Clock::now() - start).count()});
    if (!std::isfinite(val_loss)) {
      diverged = true;
      break;
    }
    if (val_loss < best_val) {
      best_val = val_loss;
      best = snapshot(*model);
      stale = 0;
    } else if (++stale >= train.patience) {
      break;
    }
  }

  restore(*model, best);
  model->eval();
  result.best_val_loss = best_val;
  if (!out_dir.empty()) {
    result.checkpoint_dir = out_dir;
    save_stdae(model, out_dir);
    std::ofstream(out_dir / "normalizer.json") << data.normalizer.to_json().dump(2) << '\n';
    write_epoch_log(out_dir / "train_log.csv", result.history);
  }
  if (diverged) {
    throw TrainingError("pretraining diverged (non-finite loss) after " + std::to_string(result.history.size()) +
                        " epochs; last good checkpoint kept" +
                        (out_dir.empty() ? std::string() : " in '" + out_dir.string() + "'"));
  }
  return result;
}

// --- downstream -----------------------------------------------------------------

Representations compute_representations(Stdae& model, const SampleSet& set, const MaskSpec& mask,
                                        const InterchangeSpec& spec, std::int64_t last_patches,
                                        std::int64_t batch_size) {
  torch::NoGradGuard guard;
  model->eval();
  std::vector<torch::Tensor> spatial, temporal;
  for (std::int64_t i = 0; i < set.size(); i += batch_size) {
    std::vector<std::int64_t> idx;
    for (std::int64_t k = i; k < std::min(set.size(), i + batch_size); ++k) idx.push_back(k);
    const auto x = apply_mask(set.long_inputs(idx), mask, spec).values;
    auto [s, t] = model->encode_last(x, last_patches);
    spatial.push_back(s);
    temporal.push_back(t);
  }
  return {torch::cat(spatial), torch::cat(temporal)};
}

namespace {

double forecast_loss(Forecaster& model, const SampleSet& set, const Representations& reps,
                     const std::vector<std::int64_t>& idx, const MaskSpec& mask, const InterchangeSpec& spec,
                     std::int64_t batch_size) {
  torch::NoGradGuard guard;
  double total = 0.0;
  for (std::size_t i = 0; i < idx.size(); i += batch_size) {
    std::vector<std::int64_t> part(idx.begin() + i, idx.begin() + std::min(idx.size(), i + batch_size));
    const auto x = apply_mask(set.inputs(part), mask, spec).values;
    const auto y = model->forward(x, gather_rows(reps.spatial, part), gather_rows(reps.temporal, part));
    total += (y - set.targets(part)).abs().mean().item<double>() * static_cast<double>(part.size());
  }
  return total / static_cast<double>(idx.size());
}

}  // namespace

DownstreamResult train_downstream(const PreparedData& data, Stdae* pretrained, const ForecasterConfig& cfg,
                                  const TrainConfig& train, const MaskSpec& mask, const DownstreamOptions& options,
                                  const std::filesystem::path& out_dir) {
  train.validate();
  mask.validate(data.spec);
  const bool uses_stdae = cfg.mode != FusionMode::kNone;
  if (uses_stdae) {
    if (pretrained == nullptr) throw ConfigError("fusion mode '" + to_string(cfg.mode) + "' needs a pretrained STDAE");
    const auto& sc = (*pretrained)->config();
    if (sc.num_nodes != data.spec.num_movements() || sc.t_long != data.windows.long_len ||
        sc.channels != data.train.channels() || sc.embed_dim != cfg.stdae_dim || sc.patch_len != cfg.patch_len) {
      throw ConfigError("pretrained checkpoint is incompatible with the dataset or forecaster config");
    }
  }
  const auto& pc = cfg.predictor;
  if (pc.num_nodes != data.spec.num_movements() || pc.input_len != data.windows.input_len ||
      pc.horizon != data.windows.horizon || pc.channels != data.train.channels()) {
    throw ConfigError("predictor config does not match the dataset dimensions");
  }

  Representations train_reps, val_reps;
  if (uses_stdae) {
    for (auto& p : (*pretrained)->parameters()) p.set_requires_grad(false);
    train_reps = compute_representations(*pretrained, data.train, mask, data.spec, cfg.last_patches);
    val_reps = compute_representations(*pretrained, data.val, mask, data.spec, cfg.last_patches);
  }

  torch::manual_seed(options.seed);
  DownstreamResult result;
  result.model = Forecaster(cfg, full_adjacency(data.spec));
  auto& model = result.model;
  if (options.freeze_fusion_at_zero) model->freeze_fusion_at_zero();
  torch::optim::Adam opt(model->trainable_parameters(), torch::optim::AdamOptions(train.learning_rate));
  std::mt19937_64 rng(options.seed);

  const auto val_idx = evaluation_indices(data.val.size(), train.max_eval_samples);
  auto best = snapshot(*model);
  double best_val = std::numeric_limits<double>::infinity();
  std::int64_t stale = 0;
  const auto start = Clock::now();

  for (std::int64_t epoch = 1; epoch <= train.max_epochs; ++epoch) {
    set_learning_rate(opt, epoch_learning_rate(train, epoch - 1));
    model->train();
    double total = 0.0;
    std::int64_t count = 0;
    for (const auto& idx : shuffled_batches(data.train.size(), train.batch_size, train.max_batches_per_epoch, rng)) {
      const auto x = apply_mask(data.train.inputs(idx), mask, data.spec).values;
      opt.zero_grad();
      const auto y = model->forward(x, gather_rows(train_reps.spatial, idx), gather_rows(train_reps.temporal, idx));
      auto loss = (y - data.train.targets(idx)).abs().mean();
      const double value = loss.item<double>();
      if (!std::isfinite(value)) throw TrainingError("downstream training diverged (non-finite loss)");
      loss.backward();
      if (train.grad_clip > 0) torch::nn::utils::clip_grad_norm_(model->trainable_parameters(), train.grad_clip);
      opt.step();
      total += value * static_cast<double>(idx.size());
      count += static_cast<std::int64_t>(idx.size());
    }
    model->eval();
    const double val_loss = forecast_loss(model, data.val, val_reps, val_idx, mask, data.spec, 64);
    result.history.push_back({epoch, total / static_cast<double>(std::max<std::int64_t>(count, 1)), val_loss,
                              std::chrono::duration<double>(Clock::now() - start).count()});
    if (val_loss < best_val) {
      best_val = val_loss;
      best = snapshot(*model);
      stale = 0;
    } else if (++stale >= train.patience) {
      break;
    }
  }
  restore(*model, best);
  model->eval();
  result.best_val_loss = best_val;
  if (!out_dir.empty()) {
    result.checkpoint_dir = out_dir;
    save_forecaster(model, out_dir, data.normalizer, mask, options.pretrain_id);
    write_epoch_log(out_dir / "train_log.csv", result.history);
  }
  return result;
}

void save_forecaster(Forecaster& model, const std::filesystem::path& dir, const Normalizer& normalizer,
                     const MaskSpec& mask, const std::string& pretrain_id) {
  std::filesystem::create_directories(dir);
  torch::save(model, (dir / "forecaster.pt").string());
  nlohmann::json sidecar = model->config().to_json();
  sidecar["normalizer"] = normalizer.to_json();
  sidecar["mask"] = mask.to_json();
  sidecar["pretrain_checkpoint"] = pretrain_id;
  std::ofstream(dir / "config.json") << sidecar.dump(2) << '\n';
}

LoadedForecaster load_forecaster(const std::filesystem::path& dir, const InterchangeSpec& spec) {
  std::ifstream in(dir / "config.json");
  if (!in) throw ConfigError("forecaster checkpoint '" + dir.string() + "' has no config.json");
  const auto sidecar = nlohmann::json::parse(in);
  const auto cfg = ForecasterConfig::from_json(sidecar);
  if (cfg.predictor.num_nodes != spec.num_movements()) {
    throw ConfigError("forecaster checkpoint was trained for " + std::to_string(cfg.predictor.num_nodes) +
                      " movements, interchange has " + std::to_string(spec.num_movements()));
  }
  LoadedForecaster out;
  out.model = Forecaster(cfg, full_adjacency(spec));
  torch::load(out.model, (dir / "forecaster.pt").string());
  out.model->eval();
  out.normalizer = Normalizer::from_json(sidecar.at("normalizer"));
  out.mask = MaskSpec::from_json(sidecar.at("mask"));
  out.pretrain_id = sidecar.value("pretrain_checkpoint", std::string());
  return out;
}

// --- evaluation -----------------------------------------------------------------

Predictions predict(Forecaster& model, Stdae* pretrained, const SampleSet& set, const Normalizer& normalizer,
                    const MaskSpec& mask, const InterchangeSpec& spec, std::int64_t batch_size) {
  if (set.size() == 0) throw UndefinedMetricError("cannot evaluate an empty split");
  torch::NoGradGuard guard;
  model->eval();
  const auto mode = model->config().mode;
  if (mode != FusionMode::kNone && pretrained == nullptr) {
    throw ConfigError("forecaster uses STDAE representations but no pretrained model was given");
  }
  Predictions out;
  out.samples = set.size();
  out.horizon = set.config().horizon;
  for (std::int64_t i = 0; i < set.size(); i += batch_size) {
    std::vector<std::int64_t> idx;
    for (std::int64_t k = i; k < std::min(set.size(), i + batch_size); ++k) idx.push_back(k);
    torch::Tensor spatial, temporal;
    if (mode != FusionMode::kNone) {
      (*pretrained)->eval();
      const auto x_long = apply_mask(set.long_inputs(idx), mask, spec).values;
      std::tie(spatial, temporal) = (*pretrained)->encode_last(x_long, model->config().last_patches);
    }
    const auto x = apply_mask(set.inputs(idx), mask, spec).values;
    const auto y = denormalize_forecast(model->forward(x, spatial, temporal), &normalizer).squeeze(-1).contiguous();
    const auto truth = set.targets_raw(idx).squeeze(-1).contiguous();
    out.pred.insert(out.pred.end(), y.data_ptr<double>(), y.data_ptr<double>() + y.numel());
    out.truth.insert(out.truth.end(), truth.data_ptr<double>(), truth.data_ptr<double>() + truth.numel());
  }
  return out;
}

MetricsReport evaluate(Forecaster& model, Stdae* pretrained, const SampleSet& set, const Normalizer& normalizer,
                       const MaskSpec& mask, const InterchangeSpec& spec,
                       const std::vector<std::int64_t>& horizon_steps) {
  if (set.num_nodes() != spec.num_movements()) throw ConfigError("model and split dimensions disagree");
  const auto p = predict(model, pretrained, set, normalizer, mask, spec);
  std::vector<std::string> ids;
  for (const auto& m : spec.movements) ids.push_back(m.id);
  return build_report(p.pred, p.truth, p.samples, p.horizon, ids, horizon_steps);
}

}  // namespace ramp_stdae
