#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ramp_stdae/dataset.hpp"
#include "ramp_stdae/topology.hpp"

namespace ramp_stdae {

/// Synthetic interchange where every ramp volume is a known fraction of a
/// lagged upstream mainline flow.
///
///   flow_d(t)  = base * (1 + amplitude * sin(2 pi t / steps_per_day + phase_d)) + level_d(t) + noise
///   ramp_m(t)  = split_m * flow_up(m)(t - lag_m) + noise
///   speed_d(t) = clamp(free_flow_speed - k * flow_d(t), min_speed, free_flow_speed)
///
/// with k chosen so the diurnal peak flow maps to 60 km/h. level_d is an
/// optional AR(1) demand drift (disabled when level_std = 0). Flows are
/// clipped at zero.
struct SynthConfig {
  std::int64_t days = 23;
  std::int64_t interval_sec = 300;
  double base_flow = 100.0;
  double diurnal_amplitude = 0.8;
  /// One per movement; empty means the default 0.10/0.15/0.20 pattern per upstream.
  std::vector<double> split_fractions;
  /// One per movement; empty means lags cycling through 1, 2, 3.
  std::vector<std::int64_t> lags;
  double noise_std = 2.0;
  double level_std = 0.0;
  double level_corr = 0.98;
  double free_flow_speed = 110.0;
  double min_speed = 20.0;
  std::string start = "2024-09-07T00:00:00";
  std::uint64_t seed = 0;

  std::int64_t steps_per_day() const;
  std::int64_t total_steps() const { return days * steps_per_day(); }

  /// Fills empty split/lag lists with the defaults for `spec`.
  SynthConfig resolved(const InterchangeSpec& spec) const;
  void validate(const InterchangeSpec& spec) const;

  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& doc);
};

Dataset generate(const InterchangeSpec& spec, const SynthConfig& cfg);

}  // namespace ramp_stdae
