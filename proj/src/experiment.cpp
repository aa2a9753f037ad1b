#include "ramp_stdae/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include "ramp_stdae/plot.hpp"
#include "ramp_stdae/timeutil.hpp"

namespace ramp_stdae {

namespace {

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

std::filesystem::path stdae_dir(const ExperimentConfig& cfg) { return cfg.output_dir / "stdae"; }

std::filesystem::path forecaster_dir(const ExperimentConfig& cfg, FusionMode mode) {
  return cfg.output_dir / ("forecaster_" + to_string(mode));
}

PreparedData load_prepared(const ExperimentConfig& cfg) {
  const auto data = load_dataset(cfg.dataset_dir);
  return prepare(data, cfg.windows(data.spec.interval_sec));
}

std::string pretrain_id(const std::filesystem::path& dir) {
  return dir.string() + "#" + file_fingerprint(dir / "stdae.pt");
}

}  // namespace

// --- config ---------------------------------------------------------------------

ExperimentConfig::ExperimentConfig() {
  pretrain.max_epochs = 50;
  train.max_epochs = 100;
}

std::int64_t ExperimentConfig::resolved_long_len(std::int64_t interval) const {
  return long_len > 0 ? long_len : kSecondsPerDay / interval;
}

WindowConfig ExperimentConfig::windows(std::int64_t interval) const {
  return {input_len, resolved_long_len(interval), horizon};
}

void ExperimentConfig::validate(bool check_paths) const {
  std::vector<std::string> errors;
  if (interval_sec <= 0 || kSecondsPerDay % interval_sec != 0) errors.push_back("interval_sec: must divide 86400");
  for (auto interval : robustness.intervals) {
    if (interval <= 0 || kSecondsPerDay % interval != 0) errors.push_back("robustness.intervals: each must divide 86400");
  }
  if (patch_len <= 0) errors.push_back("patch_len: must be positive");
  else if (interval_sec > 0 && resolved_long_len(interval_sec) % patch_len != 0) {
    errors.push_back("long_len: T_long (" + std::to_string(resolved_long_len(interval_sec)) +
                     ") must be divisible by patch_len (" + std::to_string(patch_len) + ")");
  }
  if (input_len <= 0 || horizon <= 0) errors.push_back("input_len/horizon: must be positive");
  if (last_patches == 1 && input_len != patch_len) {
    errors.push_back("input_len: must equal patch_len when last_patches = 1");
  }
  if (last_patches < 1) errors.push_back("last_patches: must be >= 1");
  else if (last_patches * patch_len < input_len) errors.push_back("last_patches: T' * L must cover input_len");
  if (resolved_long_len(interval_sec > 0 ? interval_sec : 300) < input_len) errors.push_back("long_len: must be >= input_len");
  for (auto h : horizons) {
    if (h < 1 || h > horizon) errors.push_back("horizons: step " + std::to_string(h) + " outside 1..horizon");
  }
  if (stdae.embed_dim % 4 != 0) errors.push_back("stdae.embed_dim: must be divisible by 4");
  try {
    pretrain.validate();
  } catch (const std::exception& e) {
    errors.push_back(std::string("pretrain: ") + e.what());
  }
  try {
    train.validate();
  } catch (const std::exception& e) {
    errors.push_back(std::string("train: ") + e.what());
  }
  if (check_paths && !interchange.empty() && !std::filesystem::exists(interchange)) {
    errors.push_back("interchange: '" + interchange.string() + "' does not exist");
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json doc;
  doc["dataset_dir"] = dataset_dir.string();
  doc["interchange"] = interchange.string();
  doc["output_dir"] = output_dir.string();
  doc["interval_sec"] = interval_sec;
  doc["input_len"] = input_len;
  doc["long_len"] = long_len;
  doc["horizon"] = horizon;
  doc["patch_len"] = patch_len;
  doc["last_patches"] = last_patches;
  doc["stdae"] = stdae.to_json();
  doc["predictor"] = predictor.to_json();
  doc["fusion"] = to_string(fusion);
  doc["mask"] = mask.to_json();
  doc["pretrain"] = pretrain.to_json();
  doc["train"] = train.to_json();
  doc["synth"] = synth.to_json();
  doc["horizons"] = horizons;
  doc["robustness"] = {{"intervals", robustness.intervals},
                       {"directional", robustness.directional.to_json()},
                       {"temporal", robustness.temporal.to_json()}};
  doc["plot"] = plot;
  return doc;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc) {
  static const std::set<std::string> known{
      "dataset_dir", "interchange", "output_dir", "interval_sec", "input_len", "long_len", "horizon",
      "patch_len",   "last_patches", "stdae",     "predictor",    "fusion",    "mask",     "pretrain",
      "train",       "synth",        "horizons",  "robustness",   "plot"};
  if (!doc.is_object()) throw ParseError("experiment config must be a JSON object");
  std::vector<std::string> unknown;
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) unknown.push_back(key + ": unknown field");
  }
  if (!unknown.empty()) throw ValidationError(std::move(unknown));
  ExperimentConfig c;
  try {
    c.dataset_dir = doc.value("dataset_dir", c.dataset_dir.string());
    c.interchange = doc.value("interchange", c.interchange.string());
    c.output_dir = doc.value("output_dir", c.output_dir.string());
    c.interval_sec = doc.value("interval_sec", c.interval_sec);
    c.input_len = doc.value("input_len", c.input_len);
    c.long_len = doc.value("long_len", c.long_len);
    c.horizon = doc.value("horizon", c.horizon);
    c.patch_len = doc.value("patch_len", c.patch_len);
    c.last_patches = doc.value("last_patches", c.last_patches);
    if (doc.contains("stdae")) c.stdae = StdaeConfig::from_json(doc.at("stdae"));
    if (doc.contains("predictor")) c.predictor = PredictorConfig::from_json(doc.at("predictor"));
    c.fusion = fusion_mode_from_string(doc.value("fusion", to_string(c.fusion)));
    if (doc.contains("mask")) c.mask = MaskSpec::from_json(doc.at("mask"));
    if (doc.contains("pretrain")) c.pretrain = TrainConfig::from_json(doc.at("pretrain"));
    if (doc.contains("train")) {
      const auto max_epochs = c.train.max_epochs;
      c.train = TrainConfig::from_json(doc.at("train"));
      if (!doc.at("train").contains("max_epochs")) c.train.max_epochs = max_epochs;
    }
    if (doc.contains("synth")) c.synth = SynthConfig::from_json(doc.at("synth"));
    c.horizons = doc.value("horizons", c.horizons);
    if (doc.contains("robustness")) {
      const auto& r = doc.at("robustness");
      c.robustness.intervals = r.value("intervals", c.robustness.intervals);
      if (r.contains("directional")) c.robustness.directional = MaskSpec::from_json(r.at("directional"));
      if (r.contains("temporal")) c.robustness.temporal = MaskSpec::from_json(r.at("temporal"));
    }
    c.plot = doc.value("plot", c.plot);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path.string() + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ParseError("override '" + assignment + "' is not key=value");
  const auto key = assignment.substr(0, eq);
  const auto raw = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  nlohmann::json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part) || !(*node)[part].is_object()) (*node)[part] = nlohmann::json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

InterchangeSpec resolve_interchange(const ExperimentConfig& cfg) {
  auto spec = cfg.interchange.empty() ? default_interchange(cfg.interval_sec) : load_interchange(cfg.interchange);
  spec.interval_sec = cfg.interval_sec;
  return spec;
}

StdaeConfig stdae_config_for(const ExperimentConfig& cfg, const PreparedData& data) {
  auto s = cfg.stdae;
  s.num_nodes = data.spec.num_movements();
  s.channels = data.train.channels();
  s.t_long = data.windows.long_len;
  s.patch_len = cfg.patch_len;
  return s;
}

ForecasterConfig forecaster_config_for(const ExperimentConfig& cfg, const PreparedData& data, FusionMode mode) {
  ForecasterConfig f;
  f.predictor = cfg.predictor;
  f.predictor.num_nodes = data.spec.num_movements();
  f.predictor.channels = data.train.channels();
  f.predictor.input_len = data.windows.input_len;
  f.predictor.horizon = data.windows.horizon;
  f.mode = mode;
  f.stdae_dim = cfg.stdae.embed_dim;
  f.fusion_hidden = cfg.stdae.embed_dim;
  f.last_patches = cfg.last_patches;
  f.patch_len = cfg.patch_len;
  return f;
}

void write_config_snapshot(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  write_json(dir / "config.resolved.json", cfg.to_json());
}

// --- workflow -------------------------------------------------------------------

std::filesystem::path run_synth(const ExperimentConfig& cfg) {
  cfg.validate(true);
  auto synth = cfg.synth;
  synth.interval_sec = cfg.interval_sec;
  const auto data = generate(resolve_interchange(cfg), synth);
  save_dataset(data, cfg.dataset_dir);
  write_config_snapshot(cfg, cfg.dataset_dir);
  return cfg.dataset_dir;
}

PretrainResult run_pretrain(const ExperimentConfig& cfg) {
  cfg.validate(true);
  const auto data = load_prepared(cfg);
  write_config_snapshot(cfg, cfg.output_dir);
  return pretrain(data, stdae_config_for(cfg, data), cfg.pretrain, cfg.mask, stdae_dir(cfg));
}

MetricsReport train_and_evaluate(const ExperimentConfig& cfg, const PreparedData& data, Stdae* pretrained,
                                 FusionMode mode, const MaskSpec& mask, const std::filesystem::path& out_dir,
                                 const std::string& pretrain_id) {
  const auto fcfg = forecaster_config_for(cfg, data, mode);
  std::vector<MetricsReport> runs;
  for (auto seed : cfg.train.seeds) {
    DownstreamOptions opts;
    opts.seed = seed;
    opts.pretrain_id = pretrain_id;
    const auto dir = out_dir.empty() ? out_dir : out_dir / ("seed_" + std::to_string(seed));
    auto result = train_downstream(data, pretrained, fcfg, cfg.train, mask, opts, dir);
    auto report = evaluate(result.model, pretrained, data.test, data.normalizer, mask, data.spec, cfg.horizons);
    if (!dir.empty()) write_json(dir / "metrics.json", report.to_json());
    runs.push_back(std::move(report));
  }
  auto avg = average_reports(runs);
  if (!out_dir.empty()) write_json(out_dir / "metrics.json", avg.to_json());
  return avg;
}

MetricsReport run_train(const ExperimentConfig& cfg) {
  cfg.validate(true);
  const auto data = load_prepared(cfg);
  write_config_snapshot(cfg, cfg.output_dir);
  if (cfg.fusion == FusionMode::kNone) {
    return train_and_evaluate(cfg, data, nullptr, cfg.fusion, cfg.mask, forecaster_dir(cfg, cfg.fusion));
  }
  auto model = load_stdae(stdae_dir(cfg), data.spec.num_movements(), data.train.channels(), data.windows.long_len);
  return train_and_evaluate(cfg, data, &model, cfg.fusion, cfg.mask, forecaster_dir(cfg, cfg.fusion),
                            pretrain_id(stdae_dir(cfg)));
}

MetricsReport run_eval(const ExperimentConfig& cfg) {
  cfg.validate(true);
  const auto data = load_prepared(cfg);
  const auto dir = forecaster_dir(cfg, cfg.fusion);
  std::optional<Stdae> pretrained;
  if (cfg.fusion != FusionMode::kNone) {
    pretrained = load_stdae(stdae_dir(cfg), data.spec.num_movements(), data.train.channels(), data.windows.long_len);
  }
  std::vector<MetricsReport> runs;
  for (auto seed : cfg.train.seeds) {
    const auto seed_dir = dir / ("seed_" + std::to_string(seed));
    auto loaded = load_forecaster(seed_dir, data.spec);
    Stdae* stdae = pretrained ? &*pretrained : nullptr;
    auto report = evaluate(loaded.model, stdae, data.test, loaded.normalizer, cfg.mask, data.spec, cfg.horizons);
    runs.push_back(report);
    if (cfg.plot) {
      const auto p = predict(loaded.model, stdae, data.test, loaded.normalizer, cfg.mask, data.spec);
      const auto m = data.spec.num_movements();
      const auto limit = std::min<std::int64_t>(p.samples, kSecondsPerDay / data.spec.interval_sec);
      std::filesystem::create_directories(seed_dir / "plots");
      for (auto step : cfg.horizons) {
        for (std::int64_t j = 0; j < m; ++j) {
          std::vector<double> truth, pred;
          for (std::int64_t s = 0; s < limit; ++s) {
            const auto idx = (s * p.horizon + (step - 1)) * m + j;
            truth.push_back(p.truth[idx]);
            pred.push_back(p.pred[idx]);
          }
          char name[64];
          std::snprintf(name, sizeof(name), "step%02lld_movement%02lld.svg", static_cast<long long>(step),
                        static_cast<long long>(j));
          write_forecast_svg(seed_dir / "plots" / name,
                             data.spec.movements[j].label + ", step " + std::to_string(step), truth, pred);
        }
      }
    }
  }
  auto avg = average_reports(runs);
  const auto eval_dir = cfg.output_dir / ("eval_" + to_string(cfg.fusion));
  write_json(eval_dir / "metrics.json", avg.to_json());
  write_config_snapshot(cfg, eval_dir);
  return avg;
}

std::map<std::string, MetricsReport> run_ablate(const ExperimentConfig& cfg) {
  cfg.validate(true);
  const auto data = load_prepared(cfg);
  const auto dir = cfg.output_dir / "ablation";
  write_config_snapshot(cfg, dir);
  auto pre = pretrain(data, stdae_config_for(cfg, data), cfg.pretrain, cfg.mask, dir / "stdae");
  const auto id = pretrain_id(dir / "stdae");
  std::map<std::string, MetricsReport> out;
  nlohmann::json summary;
  for (auto mode : {FusionMode::kBoth, FusionMode::kTemporal, FusionMode::kSpatial, FusionMode::kNone}) {
    Stdae* model = mode == FusionMode::kNone ? nullptr : &pre.model;
    auto report = train_and_evaluate(cfg, data, model, mode, cfg.mask, dir / ("forecaster_" + to_string(mode)), id);
    summary[to_string(mode)] = report.to_json();
    out.emplace(to_string(mode), std::move(report));
  }
  write_json(dir / "ablation.json", summary);
  return out;
}

std::vector<RobustnessCell> run_robustness(const ExperimentConfig& cfg) {
  cfg.validate(true);
  const auto root = cfg.output_dir / "robustness";
  write_config_snapshot(cfg, root);
  std::vector<RobustnessCell> cells;
  nlohmann::json grid = nlohmann::json::array();
  for (auto interval : cfg.robustness.intervals) {
    auto local = cfg;
    local.interval_sec = interval;
    local.validate(false);
    auto synth = cfg.synth;
    synth.interval_sec = interval;
    const auto data = prepare(generate(resolve_interchange(local), synth), local.windows(interval));
    for (const auto& mask : {cfg.robustness.directional, cfg.robustness.temporal}) {
      const auto tag = std::to_string(interval) + "s_" + (mask.kind == MaskSpec::Kind::kTemporal ? "temporal" : "directional");
      const auto dir = root / tag;
      auto pre = pretrain(data, stdae_config_for(local, data), cfg.pretrain, mask, dir / "stdae");
      const auto id = pretrain_id(dir / "stdae");
      RobustnessCell cell;
      cell.interval_sec = interval;
      cell.mask = mask.describe();
      cell.enhanced = train_and_evaluate(local, data, &pre.model, FusionMode::kBoth, mask, dir / "forecaster_full", id);
      cell.baseline = train_and_evaluate(local, data, nullptr, FusionMode::kNone, mask, dir / "forecaster_none");
      grid.push_back({{"interval_sec", interval},
                      {"mask", cell.mask},
                      {"enhanced", cell.enhanced.to_json()},
                      {"baseline", cell.baseline.to_json()},
                      {"mae_reduction", cell.mae_reduction()}});
      cells.push_back(std::move(cell));
    }
  }
  write_json(root / "robustness.json", grid);
  return cells;
}

}  // namespace ramp_stdae
