#include "ramp_stdae/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace ramp_stdae {

namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(where + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void check_id(const std::string& id) {
  if (id.find_first_of(",\n\r\"") != std::string::npos) {
    throw SchemaError("identifier '" + id + "' cannot be written to CSV (contains a separator)");
  }
}

struct LongTable {
  std::vector<EpochSeconds> timestamps;  // sorted unique
  torch::Tensor values;                  // [T, ids, cols] float64
};

// Reads a long-format CSV (timestamp, id, value columns...) into a dense grid.
LongTable read_long_csv(const std::filesystem::path& path, const std::vector<std::string>& expected_header,
                        const std::vector<std::string>& ids, std::int64_t interval_sec) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("'" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() != expected_header.size() ||
      !std::equal(header.begin(), header.end(), expected_header.begin())) {
    throw SchemaError("'" + path.string() + "' header mismatch: expected '" + [&] {
      std::string h;
      for (const auto& c : expected_header) h += (h.empty() ? "" : ",") + c;
      return h;
    }() + "'");
  }
  std::unordered_map<std::string, std::int64_t> id_index;
  for (std::size_t i = 0; i < ids.size(); ++i) id_index.emplace(ids[i], static_cast<std::int64_t>(i));

  const auto cols = static_cast<std::int64_t>(expected_header.size()) - 2;
  std::map<EpochSeconds, std::vector<double>> rows;
  std::map<EpochSeconds, std::vector<char>> seen;
  const auto n_ids = static_cast<std::int64_t>(ids.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const auto where = path.filename().string() + ":" + std::to_string(line_no);
    if (static_cast<std::int64_t>(fields.size()) != cols + 2) throw ParseError(where + ": wrong number of fields");
    const auto t = parse_iso8601(fields[0]);
    const auto it = id_index.find(std::string(fields[1]));
    if (it == id_index.end()) throw SchemaError(where + ": unknown id '" + std::string(fields[1]) + "'");
    auto& row = rows[t];
    auto& flags = seen[t];
    if (row.empty()) {
      row.assign(n_ids * cols, 0.0);
      flags.assign(n_ids, 0);
    }
    if (flags[it->second]) throw SchemaError(where + ": duplicate entry for (" + std::string(fields[0]) + ", " + it->first + ")");
    flags[it->second] = 1;
    for (std::int64_t c = 0; c < cols; ++c) row[it->second * cols + c] = parse_double(fields[2 + c], where);
  }
  if (rows.empty()) throw InsufficientDataError("'" + path.string() + "' has no data rows");

  LongTable table;
  table.values = torch::empty({static_cast<std::int64_t>(rows.size()), n_ids, cols}, torch::kFloat64);
  auto acc = table.values.accessor<double, 3>();
  std::int64_t t_idx = 0;
  for (const auto& [t, row] : rows) {
    if (!table.timestamps.empty() && t - table.timestamps.back() != interval_sec) {
      throw SchemaError("'" + path.string() + "': missing or irregular timestamps after " +
                        format_iso8601(table.timestamps.back()));
    }
    const auto& flags = seen[t];
    for (std::int64_t i = 0; i < n_ids; ++i) {
      if (!flags[i]) {
        throw SchemaError("'" + path.string() + "': missing entry for (" + format_iso8601(t) + ", " + ids[i] + ")");
      }
      for (std::int64_t c = 0; c < cols; ++c) acc[t_idx][i][c] = row[i * cols + c];
    }
    table.timestamps.push_back(t);
    ++t_idx;
  }
  return table;
}

}  // namespace

std::vector<std::string> mainline_channel_names() { return {"flow", "speed", "time_of_day", "day_of_week"}; }

std::vector<std::string> fused_channel_names() {
  std::vector<std::string> out;
  for (const auto* side : {"up", "down"}) {
    for (const auto& c : mainline_channel_names()) out.push_back(std::string(side) + "_" + c);
  }
  return out;
}

void fill_calendar_channels(MainlineSeries& series) {
  auto acc = series.values.accessor<double, 3>();
  for (std::int64_t t = 0; t < series.steps(); ++t) {
    const auto tod = time_of_day_fraction(series.timestamps[t]);
    const auto dow = day_of_week_fraction(series.timestamps[t]);
    for (std::int64_t n = 0; n < series.values.size(1); ++n) {
      acc[t][n][kTimeOfDay] = tod;
      acc[t][n][kDayOfWeek] = dow;
    }
  }
}

FusedSeries fuse_features(const MainlineSeries& mainline, const InterchangeSpec& spec) {
  if (mainline.values.dim() != 3 || mainline.values.size(2) != kMainlineFeatures) {
    throw SchemaError("mainline values must have shape [T, N, 4]");
  }
  std::unordered_map<std::string, std::int64_t> column;
  for (std::size_t i = 0; i < mainline.direction_ids.size(); ++i) column.emplace(mainline.direction_ids[i], i);
  std::vector<std::int64_t> up, down;
  for (const auto& m : spec.movements) {
    for (const auto* id : {&m.upstream, &m.downstream}) {
      if (!column.count(*id)) throw SchemaError("mainline series has no column for direction '" + *id + "'");
    }
    up.push_back(column.at(m.upstream));
    down.push_back(column.at(m.downstream));
  }
  const auto opts = torch::TensorOptions().dtype(torch::kLong);
  const auto up_t = torch::tensor(up, opts);
  const auto down_t = torch::tensor(down, opts);
  return {torch::cat({mainline.values.index_select(1, up_t), mainline.values.index_select(1, down_t)}, 2)};
}

// --- Normalizer ---------------------------------------------------------------

Normalizer::Normalizer(std::vector<double> input_mean, std::vector<double> input_std, double ramp_mean,
                       double ramp_std)
    : input_mean_(std::move(input_mean)), input_std_(std::move(input_std)), ramp_mean_(ramp_mean), ramp_std_(ramp_std) {}

bool Normalizer::is_normalized_channel(std::int64_t channel) {
  const auto f = channel % kMainlineFeatures;
  return f == kFlow || f == kSpeed;
}

torch::Tensor Normalizer::normalize_inputs(const torch::Tensor& x) const {
  const auto mean = torch::tensor(input_mean_, torch::kFloat64).to(x.dtype());
  const auto std = torch::tensor(input_std_, torch::kFloat64).to(x.dtype());
  return (x - mean) / std;
}

torch::Tensor Normalizer::denormalize_inputs(const torch::Tensor& x) const {
  const auto mean = torch::tensor(input_mean_, torch::kFloat64).to(x.dtype());
  const auto std = torch::tensor(input_std_, torch::kFloat64).to(x.dtype());
  return x * std + mean;
}

torch::Tensor Normalizer::normalize_ramps(const torch::Tensor& y) const { return (y - ramp_mean_) / ramp_std_; }

torch::Tensor Normalizer::denormalize_ramps(const torch::Tensor& y) const { return y * ramp_std_ + ramp_mean_; }

nlohmann::json Normalizer::to_json() const {
  return {{"input_mean", input_mean_}, {"input_std", input_std_}, {"ramp_mean", ramp_mean_}, {"ramp_std", ramp_std_}};
}

Normalizer Normalizer::from_json(const nlohmann::json& doc) {
  return Normalizer(doc.at("input_mean").get<std::vector<double>>(), doc.at("input_std").get<std::vector<double>>(),
                    doc.at("ramp_mean").get<double>(), doc.at("ramp_std").get<double>());
}

Normalizer fit_normalizer(const FusedSeries& train_inputs, const RampSeries& train_ramps) {
  if (train_inputs.steps() == 0 || train_ramps.steps() == 0) throw NormalizationError("training split is empty");
  const auto names = fused_channel_names();
  const auto channels = train_inputs.values.size(2);
  std::vector<double> mean(channels, 0.0), std(channels, 1.0);
  const auto flat = train_inputs.values.reshape({-1, channels}).to(torch::kFloat64);
  for (std::int64_t c = 0; c < channels; ++c) {
    if (!Normalizer::is_normalized_channel(c)) continue;
    const auto col = flat.select(1, c);
    mean[c] = col.mean().item<double>();
    std[c] = col.std(/*unbiased=*/false).item<double>();
    if (!(std[c] > 0.0)) {
      throw NormalizationError("channel '" + (c < static_cast<std::int64_t>(names.size()) ? names[c] : std::to_string(c)) +
                               "' has zero variance on the training split");
    }
  }
  const auto ramps = train_ramps.values.to(torch::kFloat64);
  const double ramp_mean = ramps.mean().item<double>();
  const double ramp_std = ramps.std(false).item<double>();
  if (!(ramp_std > 0.0)) throw NormalizationError("channel 'ramp_volume' has zero variance on the training split");
  return Normalizer(std::move(mean), std::move(std), ramp_mean, ramp_std);
}

// --- Splits -------------------------------------------------------------------

SplitRanges split_by_days(std::int64_t total_steps, std::int64_t interval_sec, std::array<int, 3> ratio) {
  if (interval_sec <= 0 || kSecondsPerDay % interval_sec != 0) {
    throw AlignmentError("interval " + std::to_string(interval_sec) + " s does not divide a day");
  }
  const auto per_day = kSecondsPerDay / interval_sec;
  if (total_steps % per_day != 0) {
    throw AlignmentError("series of " + std::to_string(total_steps) + " steps is not a whole number of days (" +
                         std::to_string(per_day) + " steps per day)");
  }
  const auto days = total_steps / per_day;
  const auto sum = ratio[0] + ratio[1] + ratio[2];
  if (ratio[0] <= 0 || ratio[1] < 0 || ratio[2] <= 0) throw std::invalid_argument("split ratio must be positive");
  const auto train_days = static_cast<std::int64_t>(std::llround(static_cast<double>(days) * ratio[0] / sum));
  const auto val_days = static_cast<std::int64_t>(std::llround(static_cast<double>(days) * ratio[1] / sum));
  const auto test_days = days - train_days - val_days;
  if (train_days <= 0 || test_days <= 0 || (ratio[1] > 0 && val_days <= 0)) {
    throw InsufficientDataError("too few days (" + std::to_string(days) + ") for the requested split");
  }
  SplitRanges r;
  r.train = {0, train_days * per_day};
  r.val = {r.train.end, r.train.end + val_days * per_day};
  r.test = {r.val.end, total_steps};
  return r;
}

MainlineSeries slice(const MainlineSeries& s, StepRange r) {
  return {{s.timestamps.begin() + r.begin, s.timestamps.begin() + r.end}, s.direction_ids,
          s.values.slice(0, r.begin, r.end)};
}

RampSeries slice(const RampSeries& s, StepRange r) {
  return {{s.timestamps.begin() + r.begin, s.timestamps.begin() + r.end}, s.movement_ids,
          s.values.slice(0, r.begin, r.end)};
}

FusedSeries slice(const FusedSeries& s, StepRange r) { return {s.values.slice(0, r.begin, r.end)}; }

// --- Masks --------------------------------------------------------------------

void MaskSpec::validate(const InterchangeSpec& spec) const {
  switch (kind) {
    case Kind::kNone:
      return;
    case Kind::kDirectional: {
      if (directions.empty()) throw ValidationError({"directional mask needs at least one direction"});
      std::vector<std::string> bad;
      for (const auto& d : directions) {
        if (std::find(spec.directions.begin(), spec.directions.end(), d) == spec.directions.end()) {
          bad.push_back("mask references unknown direction '" + d + "'");
        }
      }
      if (!bad.empty()) throw ValidationError(std::move(bad));
      return;
    }
    case Kind::kTemporal:
      if (!(hide_last > 0 && hide_last <= cycle)) {
        throw ValidationError({"temporal mask needs 0 < hide_last <= cycle"});
      }
      return;
  }
}

std::string MaskSpec::describe() const {
  switch (kind) {
    case Kind::kNone:
      return "none";
    case Kind::kDirectional: {
      std::string s = "directional(";
      bool first = true;
      for (const auto& d : directions) {
        s += (first ? "" : ",") + d;
        first = false;
      }
      return s + ")";
    }
    case Kind::kTemporal:
      return "temporal(" + std::to_string(hide_last) + "/" + std::to_string(cycle) + ")";
  }
  return "?";
}

nlohmann::json MaskSpec::to_json() const {
  switch (kind) {
    case Kind::kNone:
      return {{"kind", "none"}};
    case Kind::kDirectional:
      return {{"kind", "directional"}, {"directions", std::vector<std::string>(directions.begin(), directions.end())}};
    case Kind::kTemporal:
      return {{"kind", "temporal"}, {"hide_last", hide_last}, {"cycle", cycle}};
  }
  return {};
}

MaskSpec MaskSpec::from_json(const nlohmann::json& doc) {
  const auto kind = doc.value("kind", std::string("none"));
  if (kind == "none") return none();
  if (kind == "directional") {
    const auto dirs = doc.at("directions").get<std::vector<std::string>>();
    return directional({dirs.begin(), dirs.end()});
  }
  if (kind == "temporal") return temporal(doc.at("hide_last").get<std::int64_t>(), doc.at("cycle").get<std::int64_t>());
  throw ParseError("unknown mask kind '" + kind + "'");
}

torch::Tensor observation_indicator(std::int64_t steps, const MaskSpec& mask, const InterchangeSpec& spec) {
  mask.validate(spec);
  const auto m = spec.num_movements();
  auto ind = torch::ones({steps, m, kFusedChannels}, torch::kFloat32);
  if (mask.kind == MaskSpec::Kind::kDirectional) {
    for (std::int64_t i = 0; i < m; ++i) {
      const auto& mv = spec.movements[i];
      if (mask.directions.count(mv.upstream)) ind.select(1, i).slice(1, 0, kMainlineFeatures).zero_();
      if (mask.directions.count(mv.downstream)) ind.select(1, i).slice(1, kMainlineFeatures, kFusedChannels).zero_();
    }
  } else if (mask.kind == MaskSpec::Kind::kTemporal) {
    for (std::int64_t s = 0; s < steps; ++s) {
      if (s % mask.cycle >= mask.cycle - mask.hide_last) ind.select(0, s).zero_();
    }
  }
  return ind;
}

MaskedWindow apply_mask(const torch::Tensor& window, const MaskSpec& mask, const InterchangeSpec& spec) {
  if (window.dim() < 3 || window.size(-1) != kFusedChannels || window.size(-2) != spec.num_movements()) {
    throw SchemaError("mask expects a window shaped [..., steps, M, 2F]");
  }
  const auto ind = observation_indicator(window.size(-3), mask, spec).to(window.dtype());
  auto observed = ind.expand(window.sizes()).contiguous();
  if (mask.kind == MaskSpec::Kind::kNone) return {window, observed};
  auto values = torch::where(observed > 0, window, torch::zeros({}, window.options()));
  return {values, observed};
}

// --- Samples ------------------------------------------------------------------

SampleSet::SampleSet(torch::Tensor inputs, torch::Tensor ramps_norm, torch::Tensor ramps_raw, WindowConfig cfg)
    : inputs_(std::move(inputs)), ramps_norm_(std::move(ramps_norm)), ramps_raw_(std::move(ramps_raw)), cfg_(cfg) {
  if (cfg_.long_len < cfg_.input_len || cfg_.input_len <= 0 || cfg_.horizon <= 0) {
    throw std::invalid_argument("window config needs T_long >= T > 0 and S > 0");
  }
  const auto steps = inputs_.size(0);
  if (steps < cfg_.long_len + cfg_.horizon) {
    throw InsufficientDataError("series of " + std::to_string(steps) + " steps is shorter than T_long + S = " +
                                std::to_string(cfg_.long_len + cfg_.horizon));
  }
  count_ = steps - cfg_.long_len - cfg_.horizon + 1;
}

torch::Tensor SampleSet::long_input(std::int64_t k) const { return inputs_.slice(0, k, k + cfg_.long_len); }

torch::Tensor SampleSet::input(std::int64_t k) const {
  return inputs_.slice(0, k + cfg_.long_len - cfg_.input_len, k + cfg_.long_len);
}

torch::Tensor SampleSet::long_ramps(std::int64_t k) const { return ramps_norm_.slice(0, k, k + cfg_.long_len); }

torch::Tensor SampleSet::target(std::int64_t k) const {
  return ramps_norm_.slice(0, k + cfg_.long_len, k + cfg_.long_len + cfg_.horizon);
}

torch::Tensor SampleSet::target_raw(std::int64_t k) const {
  return ramps_raw_.slice(0, k + cfg_.long_len, k + cfg_.long_len + cfg_.horizon);
}

namespace {
template <typename F>
torch::Tensor stack_samples(const std::vector<std::int64_t>& idx, F&& get) {
  std::vector<torch::Tensor> parts;
  parts.reserve(idx.size());
  for (auto k : idx) parts.push_back(get(k));
  return torch::stack(parts);
}
}  // namespace

torch::Tensor SampleSet::long_inputs(const std::vector<std::int64_t>& idx) const {
  return stack_samples(idx, [&](auto k) { return long_input(k); });
}
torch::Tensor SampleSet::inputs(const std::vector<std::int64_t>& idx) const {
  return stack_samples(idx, [&](auto k) { return input(k); });
}
torch::Tensor SampleSet::long_ramps(const std::vector<std::int64_t>& idx) const {
  return stack_samples(idx, [&](auto k) { return long_ramps(k); });
}
torch::Tensor SampleSet::targets(const std::vector<std::int64_t>& idx) const {
  return stack_samples(idx, [&](auto k) { return target(k); });
}
torch::Tensor SampleSet::targets_raw(const std::vector<std::int64_t>& idx) const {
  return stack_samples(idx, [&](auto k) { return target_raw(k); });
}

SampleSet make_samples(const FusedSeries& fused_norm, const torch::Tensor& ramps_norm, const RampSeries& ramps_raw,
                       WindowConfig cfg) {
  if (fused_norm.steps() != ramps_raw.steps() || ramps_norm.size(0) != ramps_raw.steps()) {
    throw SchemaError("input and ramp series are not aligned");
  }
  return SampleSet(fused_norm.values.to(torch::kFloat32).contiguous(), ramps_norm.to(torch::kFloat32).contiguous(),
                   ramps_raw.values.to(torch::kFloat64).contiguous(), cfg);
}

// --- Dataset I/O --------------------------------------------------------------

void Dataset::validate() const {
  spec.validate();
  if (mainline.steps() != ramps.steps() || mainline.timestamps != ramps.timestamps) {
    throw SchemaError("mainline and ramp timestamps are not aligned");
  }
  for (std::int64_t t = 1; t < mainline.steps(); ++t) {
    if (mainline.timestamps[t] - mainline.timestamps[t - 1] != spec.interval_sec) {
      throw SchemaError("timestamps are not uniformly spaced at " + std::to_string(spec.interval_sec) + " s");
    }
  }
  if (mainline.values.size(0) != mainline.steps() || mainline.values.size(2) != kMainlineFeatures) {
    throw SchemaError("mainline tensor shape does not match timestamps");
  }
  if (ramps.values.size(1) != spec.num_movements()) throw SchemaError("ramp tensor has the wrong number of movements");
  if ((mainline.values.select(2, kFlow) < 0).any().item<bool>()) throw SchemaError("negative mainline flow");
  if ((ramps.values < 0).any().item<bool>()) throw SchemaError("negative ramp volume");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "meta.json");
  if (!meta_in) throw ParseError("cannot open '" + (dir / "meta.json").string() + "'");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("meta.json is not valid JSON: ") + e.what());
  }
  if (!meta.contains("interchange")) throw ParseError("missing field 'interchange' in meta.json");
  Dataset data;
  data.spec = interchange_from_json(meta.at("interchange"));
  if (meta.contains("interval_sec") && meta.at("interval_sec").get<std::int64_t>() != data.spec.interval_sec) {
    throw SchemaError("meta.json interval_sec disagrees with the interchange spec");
  }
  const auto interval = data.spec.interval_sec;

  auto mainline = read_long_csv(dir / "mainline.csv", {"timestamp", "gantry_id", "volume", "speed"},
                                data.spec.directions, interval);
  auto ramps = read_long_csv(dir / "ramp.csv", {"timestamp", "movement_id", "volume"},
                             [&] {
                               std::vector<std::string> ids;
                               for (const auto& m : data.spec.movements) ids.push_back(m.id);
                               return ids;
                             }(),
                             interval);

  data.mainline.timestamps = mainline.timestamps;
  data.mainline.direction_ids = data.spec.directions;
  data.mainline.values = torch::zeros({mainline.values.size(0), mainline.values.size(1), kMainlineFeatures},
                                      torch::kFloat64);
  data.mainline.values.slice(2, 0, 2).copy_(mainline.values);
  fill_calendar_channels(data.mainline);

  data.ramps.timestamps = ramps.timestamps;
  data.ramps.movement_ids.clear();
  for (const auto& m : data.spec.movements) data.ramps.movement_ids.push_back(m.id);
  data.ramps.values = ramps.values;
  data.validate();
  return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
  data.validate();
  std::filesystem::create_directories(dir);
  nlohmann::json meta;
  meta["interchange"] = interchange_to_json(data.spec);
  meta["interval_sec"] = data.spec.interval_sec;
  meta["mainline_channels"] = mainline_channel_names();
  meta["ramp_channels"] = std::vector<std::string>{"volume"};
  meta["fused_channels"] = fused_channel_names();
  {
    std::ofstream out(dir / "meta.json");
    out << meta.dump(2) << '\n';
  }
  for (const auto& d : data.spec.directions) check_id(d);
  for (const auto& m : data.spec.movements) check_id(m.id);

  {
    std::ofstream out(dir / "mainline.csv");
    if (!out) throw std::runtime_error("cannot write mainline.csv");
    out << "timestamp,gantry_id,volume,speed\n";
    const auto values = data.mainline.values.contiguous();
    auto acc = values.accessor<double, 3>();
    for (std::int64_t t = 0; t < data.mainline.steps(); ++t) {
      const auto ts = format_iso8601(data.mainline.timestamps[t]);
      for (std::size_t n = 0; n < data.mainline.direction_ids.size(); ++n) {
        out << ts << ',' << data.mainline.direction_ids[n] << ',' << format_double(acc[t][n][kFlow]) << ','
            << format_double(acc[t][n][kSpeed]) << '\n';
      }
    }
  }
  {
    std::ofstream out(dir / "ramp.csv");
    if (!out) throw std::runtime_error("cannot write ramp.csv");
    out << "timestamp,movement_id,volume\n";
    const auto values = data.ramps.values.contiguous();
    auto acc = values.accessor<double, 3>();
    for (std::int64_t t = 0; t < data.ramps.steps(); ++t) {
      const auto ts = format_iso8601(data.ramps.timestamps[t]);
      for (std::size_t m = 0; m < data.ramps.movement_ids.size(); ++m) {
        out << ts << ',' << data.ramps.movement_ids[m] << ',' << format_double(acc[t][m][0]) << '\n';
      }
    }
  }
}

PreparedData prepare(const Dataset& data, WindowConfig windows, std::array<int, 3> ratio) {
  data.validate();
  PreparedData out;
  out.spec = data.spec;
  out.windows = windows;
  out.ranges = split_by_days(data.mainline.steps(), data.spec.interval_sec, ratio);
  const auto fused = fuse_features(data.mainline, data.spec);
  out.normalizer = fit_normalizer(slice(fused, out.ranges.train), slice(data.ramps, out.ranges.train));

  const auto fused_norm = FusedSeries{out.normalizer.normalize_inputs(fused.values)};
  const auto ramps_norm = out.normalizer.normalize_ramps(data.ramps.values);
  const auto build = [&](StepRange r) {
    return make_samples(slice(fused_norm, r), ramps_norm.slice(0, r.begin, r.end), slice(data.ramps, r), windows);
  };
  out.train = build(out.ranges.train);
  out.val = build(out.ranges.val);
  out.test = build(out.ranges.test);
  return out;
}

}  // namespace ramp_stdae
