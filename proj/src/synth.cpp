#include "ramp_stdae/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

namespace ramp_stdae {

std::int64_t SynthConfig::steps_per_day() const {
  if (interval_sec <= 0 || kSecondsPerDay % interval_sec != 0) {
    throw ConfigError("interval_sec must divide 86400, got " + std::to_string(interval_sec));
  }
  return kSecondsPerDay / interval_sec;
}

SynthConfig SynthConfig::resolved(const InterchangeSpec& spec) const {
  SynthConfig out = *this;
  if (out.split_fractions.empty()) {
    std::map<std::string, int> seen;
    for (const auto& m : spec.movements) {
      const int k = seen[m.upstream]++;
      out.split_fractions.push_back(0.10 + 0.05 * (k % 3));
    }
  }
  if (out.lags.empty()) {
    for (std::int64_t m = 0; m < spec.num_movements(); ++m) out.lags.push_back(1 + m % 3);
  }
  return out;
}

void SynthConfig::validate(const InterchangeSpec& spec) const {
  const auto m = static_cast<std::size_t>(spec.num_movements());
  if (days <= 0) throw ConfigError("days must be positive");
  const auto per_day = steps_per_day();
  if (split_fractions.size() != m) {
    throw ConfigError("split_fractions has " + std::to_string(split_fractions.size()) + " entries, expected " +
                      std::to_string(m));
  }
  if (lags.size() != m) {
    throw ConfigError("lags has " + std::to_string(lags.size()) + " entries, expected " + std::to_string(m));
  }
  std::map<std::string, double> outgoing;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(split_fractions[i] > 0.0 && split_fractions[i] < 1.0)) {
      throw ConfigError("split fraction of movement '" + spec.movements[i].id + "' must lie in (0, 1)");
    }
    if (lags[i] < 0 || lags[i] >= per_day) {
      throw ConfigError("lag of movement '" + spec.movements[i].id + "' must be in [0, steps per day)");
    }
    outgoing[spec.movements[i].upstream] += split_fractions[i];
  }
  for (const auto& [dir, total] : outgoing) {
    if (total > 1.0 + 1e-12) throw ConfigError("split fractions leaving '" + dir + "' sum to more than 1");
  }
  if (base_flow < 0 || noise_std < 0 || level_std < 0) throw ConfigError("flows and noise levels must be non-negative");
  if (!(std::abs(level_corr) < 1.0)) throw ConfigError("level_corr must lie in (-1, 1)");
  if (!(min_speed >= 0 && min_speed < free_flow_speed)) throw ConfigError("need 0 <= min_speed < free_flow_speed");
  parse_iso8601(start);
}

nlohmann::json SynthConfig::to_json() const {
  return {{"days", days},
          {"interval_sec", interval_sec},
          {"base_flow", base_flow},
          {"diurnal_amplitude", diurnal_amplitude},
          {"split_fractions", split_fractions},
          {"lags", lags},
          {"noise_std", noise_std},
          {"level_std", level_std},
          {"level_corr", level_corr},
          {"free_flow_speed", free_flow_speed},
          {"min_speed", min_speed},
          {"start", start},
          {"seed", seed}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& doc) {
  SynthConfig c;
  c.days = doc.value("days", c.days);
  c.interval_sec = doc.value("interval_sec", c.interval_sec);
  c.base_flow = doc.value("base_flow", c.base_flow);
  c.diurnal_amplitude = doc.value("diurnal_amplitude", c.diurnal_amplitude);
  c.split_fractions = doc.value("split_fractions", c.split_fractions);
  c.lags = doc.value("lags", c.lags);
  c.noise_std = doc.value("noise_std", c.noise_std);
  c.level_std = doc.value("level_std", c.level_std);
  c.level_corr = doc.value("level_corr", c.level_corr);
  c.free_flow_speed = doc.value("free_flow_speed", c.free_flow_speed);
  c.min_speed = doc.value("min_speed", c.min_speed);
  c.start = doc.value("start", c.start);
  c.seed = doc.value("seed", c.seed);
  return c;
}

Dataset generate(const InterchangeSpec& spec, const SynthConfig& config) {
  spec.validate();
  const auto cfg = config.resolved(spec);
  cfg.validate(spec);

  const auto n = spec.num_directions();
  const auto m = spec.num_movements();
  const auto per_day = cfg.steps_per_day();
  const auto steps = cfg.total_steps();
  const auto history = *std::max_element(cfg.lags.begin(), cfg.lags.end());
  const auto start = parse_iso8601(cfg.start);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Mainline flow including `history` steps before the first output step so
  // lagged ramps are defined from t = 0.
  const auto total = steps + history;
  std::vector<double> flow(static_cast<std::size_t>(total * n));
  std::vector<double> level(n, 0.0);
  const double innovation = cfg.level_std * std::sqrt(1.0 - cfg.level_corr * cfg.level_corr);
  if (cfg.level_std > 0) {
    for (auto& l : level) l = cfg.level_std * gauss(rng);
  }
  for (std::int64_t i = 0; i < total; ++i) {
    const auto t = i - history;
    for (std::int64_t d = 0; d < n; ++d) {
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(d) / static_cast<double>(n);
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(per_day) + phase;
      double v = cfg.base_flow * (1.0 + cfg.diurnal_amplitude * std::sin(angle));
      if (cfg.level_std > 0) {
        level[d] = cfg.level_corr * level[d] + innovation * gauss(rng);
        v += level[d];
      }
      if (cfg.noise_std > 0) v += cfg.noise_std * gauss(rng);
      flow[i * n + d] = std::max(0.0, v);
    }
  }

  Dataset data;
  data.spec = spec;
  data.spec.interval_sec = cfg.interval_sec;
  auto& ml = data.mainline;
  ml.direction_ids = spec.directions;
  ml.values = torch::zeros({steps, n, kMainlineFeatures}, torch::kFloat64);
  const double peak = cfg.base_flow * (1.0 + cfg.diurnal_amplitude);
  const double slope = peak > 0 ? (cfg.free_flow_speed - 60.0) / peak : 0.0;
  {
    auto acc = ml.values.accessor<double, 3>();
    for (std::int64_t t = 0; t < steps; ++t) {
      ml.timestamps.push_back(start + t * cfg.interval_sec);
      for (std::int64_t d = 0; d < n; ++d) {
        const double f = flow[(t + history) * n + d];
        acc[t][d][kFlow] = f;
        acc[t][d][kSpeed] = std::clamp(cfg.free_flow_speed - slope * f, cfg.min_speed, cfg.free_flow_speed);
      }
    }
  }
  fill_calendar_channels(ml);

  auto& rs = data.ramps;
  rs.timestamps = ml.timestamps;
  for (const auto& mv : spec.movements) rs.movement_ids.push_back(mv.id);
  rs.values = torch::zeros({steps, m, 1}, torch::kFloat64);
  {
    auto acc = rs.values.accessor<double, 3>();
    std::vector<std::int64_t> up(m);
    for (std::int64_t i = 0; i < m; ++i) up[i] = spec.direction_index(spec.movements[i].upstream);
    for (std::int64_t t = 0; t < steps; ++t) {
      for (std::int64_t i = 0; i < m; ++i) {
        const double upstream = flow[(t + history - cfg.lags[i]) * n + up[i]];
        double v = cfg.split_fractions[i] * upstream;
        if (cfg.noise_std > 0) v += cfg.noise_std * gauss(rng);
        acc[t][i][0] = std::max(0.0, v);
      }
    }
  }
  return data;
}

}  // namespace ramp_stdae
