#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ramp_stdae {

class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

double mae(std::span<const double> pred, std::span<const double> truth);
double rmse(std::span<const double> pred, std::span<const double> truth);
/// Mean of |pred - truth| / truth over entries with truth > 0, as a fraction.
/// Throws UndefinedMetricError when no entry has positive truth.
double mape(std::span<const double> pred, std::span<const double> truth);

struct Metrics {
  double mae = 0.0;
  double mape = 0.0;  // NaN when undefined
  double rmse = 0.0;

  nlohmann::json to_json() const;
  static Metrics from_json(const nlohmann::json& doc);
};

/// All three metrics; mape becomes NaN instead of throwing. Enforces RMSE >= MAE.
Metrics compute_metrics(std::span<const double> pred, std::span<const double> truth);

struct MetricsReport {
  Metrics overall;
  std::map<std::int64_t, Metrics> by_horizon;  // 1-based step
  std::map<std::string, Metrics> by_movement;
  std::int64_t seeds = 1;
  Metrics std;  // spread of `overall` across seeds

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& doc);
};

/// Builds a single-run report from forecasts laid out as [samples, S, M]
/// (row-major, flattened).
MetricsReport build_report(const std::vector<double>& pred, const std::vector<double>& truth, std::int64_t samples,
                           std::int64_t horizon, const std::vector<std::string>& movement_ids,
                           const std::vector<std::int64_t>& horizon_steps);

/// Mean over seeds for every entry, with the population std of `overall`.
MetricsReport average_reports(const std::vector<MetricsReport>& runs);

}  // namespace ramp_stdae
