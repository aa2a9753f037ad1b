#include "ramp_stdae/metrics.hpp"

#include <cmath>
#include <limits>

namespace ramp_stdae {

namespace {

void check_sizes(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("prediction and truth sizes differ");
  if (pred.empty()) throw UndefinedMetricError("metric of an empty array");
}

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double number_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_sizes(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - truth[i]);
  return sum / static_cast<double>(pred.size());
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_sizes(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - truth[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

double mape(std::span<const double> pred, std::span<const double> truth) {
  check_sizes(pred, truth);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] > 0.0) {
      sum += std::abs(pred[i] - truth[i]) / truth[i];
      ++n;
    }
  }
  if (n == 0) throw UndefinedMetricError("MAPE undefined: no positive ground-truth values");
  return sum / static_cast<double>(n);
}

nlohmann::json Metrics::to_json() const {
  return {{"mae", number_or_null(mae)}, {"mape", number_or_null(mape)}, {"rmse", number_or_null(rmse)}};
}

Metrics Metrics::from_json(const nlohmann::json& doc) {
  return {number_from(doc.at("mae")), number_from(doc.at("mape")), number_from(doc.at("rmse"))};
}

Metrics compute_metrics(std::span<const double> pred, std::span<const double> truth) {
  Metrics m;
  m.mae = mae(pred, truth);
  m.rmse = rmse(pred, truth);
  try {
    m.mape = mape(pred, truth);
  } catch (const UndefinedMetricError&) {
    m.mape = std::numeric_limits<double>::quiet_NaN();
  }
  // Power-mean inequality; the slack only absorbs rounding.
  if (m.rmse < m.mae * (1.0 - 1e-12)) throw std::logic_error("RMSE < MAE: metric implementation is broken");
  return m;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json doc;
  doc["overall"] = overall.to_json();
  doc["by_horizon"] = nlohmann::json::object();
  for (const auto& [step, m] : by_horizon) doc["by_horizon"][std::to_string(step)] = m.to_json();
  doc["by_movement"] = nlohmann::json::object();
  for (const auto& [id, m] : by_movement) doc["by_movement"][id] = m.to_json();
  doc["seeds"] = seeds;
  doc["std"] = std.to_json();
  return doc;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& doc) {
  MetricsReport r;
  r.overall = Metrics::from_json(doc.at("overall"));
  for (const auto& [step, m] : doc.at("by_horizon").items()) r.by_horizon[std::stoll(step)] = Metrics::from_json(m);
  for (const auto& [id, m] : doc.at("by_movement").items()) r.by_movement[id] = Metrics::from_json(m);
  r.seeds = doc.at("seeds").get<std::int64_t>();
  r.std = Metrics::from_json(doc.at("std"));
  return r;
}

MetricsReport build_report(const std::vector<double>& pred, const std::vector<double>& truth, std::int64_t samples,
                           std::int64_t horizon, const std::vector<std::string>& movement_ids,
                           const std::vector<std::int64_t>& horizon_steps) {
  const auto m = static_cast<std::int64_t>(movement_ids.size());
  if (samples <= 0) throw UndefinedMetricError("cannot evaluate an empty split");
  if (static_cast<std::int64_t>(pred.size()) != samples * horizon * m || pred.size() != truth.size()) {
    throw std::invalid_argument("forecast arrays do not match [samples, S, M]");
  }
  MetricsReport report;
  report.overall = compute_metrics(pred, truth);

  std::vector<double> p, t;
  for (auto step : horizon_steps) {
    if (step < 1 || step > horizon) throw std::out_of_range("horizon step " + std::to_string(step) + " out of range");
    p.clear();
    t.clear();
    for (std::int64_t s = 0; s < samples; ++s) {
      for (std::int64_t j = 0; j < m; ++j) {
        const auto idx = (s * horizon + (step - 1)) * m + j;
        p.push_back(pred[idx]);
        t.push_back(truth[idx]);
      }
    }
    report.by_horizon[step] = compute_metrics(p, t);
  }
  for (std::int64_t j = 0; j < m; ++j) {
    p.clear();
    t.clear();
    for (std::int64_t s = 0; s < samples; ++s) {
      for (std::int64_t h = 0; h < horizon; ++h) {
        const auto idx = (s * horizon + h) * m + j;
        p.push_back(pred[idx]);
        t.push_back(truth[idx]);
      }
    }
    report.by_movement[movement_ids[j]] = compute_metrics(p, t);
  }
  report.seeds = 1;
  report.std = {0.0, 0.0, 0.0};
  return report;
}

MetricsReport average_reports(const std::vector<MetricsReport>& runs) {
  if (runs.empty()) throw std::invalid_argument("no runs to average");
  const auto n = static_cast<double>(runs.size());
  const auto mean_of = [&](auto&& get) {
    Metrics out{0, 0, 0};
    for (const auto& r : runs) {
      const Metrics& m = get(r);
      out.mae += m.mae / n;
      out.mape += m.mape / n;
      out.rmse += m.rmse / n;
    }
    return out;
  };
  MetricsReport avg;
  avg.overall = mean_of([](const MetricsReport& r) -> const Metrics& { return r.overall; });
  for (const auto& [step, _] : runs.front().by_horizon) {
    avg.by_horizon[step] = mean_of([s = step](const MetricsReport& r) -> const Metrics& { return r.by_horizon.at(s); });
  }
  for (const auto& [id, _] : runs.front().by_movement) {
    avg.by_movement[id] = mean_of([&id](const MetricsReport& r) -> const Metrics& { return r.by_movement.at(id); });
  }
  Metrics var{0, 0, 0};
  for (const auto& r : runs) {
    var.mae += std::pow(r.overall.mae - avg.overall.mae, 2) / n;
    var.mape += std::pow(r.overall.mape - avg.overall.mape, 2) / n;
    var.rmse += std::pow(r.overall.rmse - avg.overall.rmse, 2) / n;
  }
  avg.std = {std::sqrt(var.mae), std::sqrt(var.mape), std::sqrt(var.rmse)};
  avg.seeds = static_cast<std::int64_t>(runs.size());
  return avg;
}

}  // namespace ramp_stdae
