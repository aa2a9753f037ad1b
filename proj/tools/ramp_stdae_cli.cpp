// ramp-stdae: command-line driver for the synth / pretrain / train / eval /
// ablate / robustness workflow.
//
//   ramp-stdae <subcommand> --config FILE [--set key=value ...] [key=value ...]
//
// Exit status: 0 on success, 2 on an invalid config, 1 on any other failure.

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ramp_stdae/experiment.hpp"

using namespace ramp_stdae;

namespace {

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::string> out;
  std::optional<std::string> dataset;
  std::optional<std::string> interchange;
  std::optional<std::string> fusion;
  std::vector<std::uint64_t> seeds;
  bool plot = false;
};

// Every synth flag maps onto one key of the "synth" object.
struct SynthFlags {
  std::optional<std::int64_t> days;
  std::optional<std::int64_t> interval_sec;
  std::optional<double> base_flow;
  std::optional<double> diurnal_amplitude;
  std::vector<double> split_fractions;
  std::vector<std::int64_t> lags;
  std::optional<double> noise_std;
  std::optional<double> level_std;
  std::optional<double> level_corr;
  std::optional<double> free_flow_speed;
  std::optional<double> min_speed;
  std::optional<std::string> start;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.overrides, "Override a config field, e.g. --set train.learning_rate=0.001");
  cmd->add_option("overrides", o.overrides, "Extra key=value overrides");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--dataset", o.dataset, "Dataset directory");
  cmd->add_option("--interchange", o.interchange, "Interchange spec JSON");
  cmd->add_option("--seeds", o.seeds, "Seeds for downstream runs")->delimiter(',');
}

template <class T>
void put(nlohmann::json& doc, const char* key, const std::optional<T>& v) {
  if (v) doc[key] = *v;
}

nlohmann::json build_config(const Options& o, const SynthFlags* synth) {
  nlohmann::json doc = nlohmann::json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("config '" + o.config + "' is not valid JSON: " + e.what());
    }
  }
  if (o.out) doc["output_dir"] = *o.out;
  if (o.dataset) doc["dataset_dir"] = *o.dataset;
  if (o.interchange) doc["interchange"] = *o.interchange;
  if (o.fusion) doc["fusion"] = *o.fusion;
  if (o.plot) doc["plot"] = true;
  if (!o.seeds.empty()) doc["train"]["seeds"] = o.seeds;
  if (synth) {
    auto& s = doc["synth"];
    if (!s.is_object()) s = nlohmann::json::object();
    put(s, "days", synth->days);
    put(doc, "interval_sec", synth->interval_sec);
    put(s, "base_flow", synth->base_flow);
    put(s, "diurnal_amplitude", synth->diurnal_amplitude);
    if (!synth->split_fractions.empty()) s["split_fractions"] = synth->split_fractions;
    if (!synth->lags.empty()) s["lags"] = synth->lags;
    put(s, "noise_std", synth->noise_std);
    put(s, "level_std", synth->level_std);
    put(s, "level_corr", synth->level_corr);
    put(s, "free_flow_speed", synth->free_flow_speed);
    put(s, "min_speed", synth->min_speed);
    put(s, "start", synth->start);
    put(s, "seed", synth->seed);
  }
  for (const auto& kv : o.overrides) apply_override(doc, kv);
  return doc;
}

void print_metrics(const std::string& name, const MetricsReport& r) {
  std::cout << std::left << std::setw(10) << name << std::right << std::fixed << std::setprecision(4)
            << " MAE " << r.overall.mae << "  MAPE " << r.overall.mape << "  RMSE " << r.overall.rmse;
  if (r.seeds > 1) std::cout << "  (" << r.seeds << " seeds, MAE std " << r.std.mae << ")";
  std::cout << '\n';
  for (const auto& [step, m] : r.by_horizon) {
    std::cout << "  step " << std::setw(2) << step << "  MAE " << m.mae << "  MAPE " << m.mape << "  RMSE " << m.rmse
              << '\n';
  }
}

int run(const std::string& sub, const ExperimentConfig& cfg) {
  if (sub == "synth") {
    std::cout << "dataset written to " << run_synth(cfg).string() << '\n';
  } else if (sub == "pretrain") {
    auto r = run_pretrain(cfg);
    std::cout << "pretrained " << r.history.size() << " epochs, best val loss " << r.best_val_loss << "\ncheckpoint "
              << r.checkpoint_dir.string() << '\n';
  } else if (sub == "train") {
    print_metrics(to_string(cfg.fusion), run_train(cfg));
  } else if (sub == "eval") {
    print_metrics(to_string(cfg.fusion), run_eval(cfg));
  } else if (sub == "ablate") {
    for (const auto& [name, report] : run_ablate(cfg)) print_metrics(name, report);
  } else if (sub == "robustness") {
    for (const auto& cell : run_robustness(cfg)) {
      std::cout << std::setw(4) << cell.interval_sec << " s  " << std::left << std::setw(28) << cell.mask << std::right
                << std::fixed << std::setprecision(4) << " enhanced MAE " << cell.enhanced.overall.mae
                << "  baseline MAE " << cell.baseline.overall.mae << "  reduction " << 100.0 * cell.mae_reduction()
                << "%\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ramp flow forecasting with spatio-temporal decoupled masked autoencoder pretraining"};
  app.require_subcommand(1);

  Options opts;
  SynthFlags synth;

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic interchange dataset");
  add_common(synth_cmd, opts);
  synth_cmd->add_option("--days", synth.days);
  synth_cmd->add_option("--interval-sec", synth.interval_sec);
  synth_cmd->add_option("--base-flow", synth.base_flow);
  synth_cmd->add_option("--diurnal-amplitude", synth.diurnal_amplitude);
  synth_cmd->add_option("--split-fractions", synth.split_fractions, "One per movement")->delimiter(',');
  synth_cmd->add_option("--lags", synth.lags, "One per movement, in intervals")->delimiter(',');
  synth_cmd->add_option("--noise-std", synth.noise_std);
  synth_cmd->add_option("--level-std", synth.level_std);
  synth_cmd->add_option("--level-corr", synth.level_corr);
  synth_cmd->add_option("--free-flow-speed", synth.free_flow_speed);
  synth_cmd->add_option("--min-speed", synth.min_speed);
  synth_cmd->add_option("--start", synth.start);
  synth_cmd->add_option("--seed", synth.seed);

  auto* pretrain_cmd = app.add_subcommand("pretrain", "Pretrain the spatial and temporal autoencoders");
  add_common(pretrain_cmd, opts);
  auto* train_cmd = app.add_subcommand("train", "Train the downstream forecaster");
  add_common(train_cmd, opts);
  train_cmd->add_option("--fusion", opts.fusion, "full, tae, sae or none");
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate trained forecasters on the test split");
  add_common(eval_cmd, opts);
  eval_cmd->add_option("--fusion", opts.fusion, "full, tae, sae or none");
  eval_cmd->add_flag("--plot", opts.plot, "Write forecast-vs-truth SVG plots");
  auto* ablate_cmd = app.add_subcommand("ablate", "Compare full, TAE-only, SAE-only and bare predictor");
  add_common(ablate_cmd, opts);
  auto* robust_cmd = app.add_subcommand("robustness", "Interval x mask robustness grid");
  add_common(robust_cmd, opts);

  CLI11_PARSE(app, argc, argv);
  const auto* sub = app.get_subcommands().front();

  ExperimentConfig cfg;
  try {
    auto doc = build_config(opts, sub == synth_cmd ? &synth : nullptr);
    cfg = ExperimentConfig::from_json(doc);
    cfg.validate(true);
  } catch (const ValidationError& e) {
    std::cerr << "invalid config:\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  }

  try {
    return run(sub->get_name(), cfg);
  } catch (const ValidationError& e) {
    std::cerr << sub->get_name() << " failed:\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << sub->get_name() << " failed: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << sub->get_name() << " failed: " << e.what() << '\n';
    return 1;
  }
}
