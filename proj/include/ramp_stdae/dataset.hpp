#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "ramp_stdae/timeutil.hpp"
#include "ramp_stdae/topology.hpp"

namespace ramp_stdae {

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NormalizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mainline feature channels, in storage order.
enum MainlineChannel : std::int64_t { kFlow = 0, kSpeed = 1, kTimeOfDay = 2, kDayOfWeek = 3 };
inline constexpr std::int64_t kMainlineFeatures = 4;
inline constexpr std::int64_t kFusedChannels = 2 * kMainlineFeatures;

std::vector<std::string> mainline_channel_names();
/// Upstream features followed by downstream features.
std::vector<std::string> fused_channel_names();

/// values: [T_total, N, 4] float64, channels (flow, speed, time_of_day, day_of_week).
struct MainlineSeries {
  std::vector<EpochSeconds> timestamps;
  std::vector<std::string> direction_ids;
  torch::Tensor values;

  std::int64_t steps() const { return static_cast<std::int64_t>(timestamps.size()); }
};

/// values: [T_total, M, 1] float64 volumes.
struct RampSeries {
  std::vector<EpochSeconds> timestamps;
  std::vector<std::string> movement_ids;
  torch::Tensor values;

  std::int64_t steps() const { return static_cast<std::int64_t>(timestamps.size()); }
};

/// values: [T_total, M, 2F], upstream features then downstream features.
struct FusedSeries {
  torch::Tensor values;

  std::int64_t steps() const { return values.size(0); }
};

/// Fills the calendar channels of `values` from the timestamps.
void fill_calendar_channels(MainlineSeries& series);

FusedSeries fuse_features(const MainlineSeries& mainline, const InterchangeSpec& spec);

/// Z-score statistics for the flow/speed channels of the fused input and for
/// ramp volume, fit on training data only. Calendar channels pass through.
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(std::vector<double> input_mean, std::vector<double> input_std, double ramp_mean, double ramp_std);

  /// Works on any tensor whose last dimension is the fused channel axis.
  torch::Tensor normalize_inputs(const torch::Tensor& x) const;
  torch::Tensor denormalize_inputs(const torch::Tensor& x) const;
  torch::Tensor normalize_ramps(const torch::Tensor& y) const;
  torch::Tensor denormalize_ramps(const torch::Tensor& y) const;

  const std::vector<double>& input_mean() const { return input_mean_; }
  const std::vector<double>& input_std() const { return input_std_; }
  double ramp_mean() const { return ramp_mean_; }
  double ramp_std() const { return ramp_std_; }
  bool empty() const { return input_mean_.empty(); }

  /// Channels that are z-scored (flow and speed of both endpoints).
  static bool is_normalized_channel(std::int64_t channel);

  nlohmann::json to_json() const;
  static Normalizer from_json(const nlohmann::json& doc);

 private:
  std::vector<double> input_mean_;
  std::vector<double> input_std_;
  double ramp_mean_ = 0.0;
  double ramp_std_ = 1.0;
};

Normalizer fit_normalizer(const FusedSeries& train_inputs, const RampSeries& train_ramps);

struct StepRange {
  std::int64_t begin = 0;
  std::int64_t end = 0;
  std::int64_t size() const { return end - begin; }
};

struct SplitRanges {
  StepRange train;
  StepRange val;
  StepRange test;
};

/// Chronological day-aligned partition of `total_steps` steps.
SplitRanges split_by_days(std::int64_t total_steps, std::int64_t interval_sec,
                          std::array<int, 3> ratio = {17, 3, 3});

MainlineSeries slice(const MainlineSeries& s, StepRange r);
RampSeries slice(const RampSeries& s, StepRange r);
FusedSeries slice(const FusedSeries& s, StepRange r);

/// Declarative missing-data pattern applied to fused windows.
struct MaskSpec {
  enum class Kind { kNone, kDirectional, kTemporal };
  Kind kind = Kind::kNone;
  std::set<std::string> directions;
  std::int64_t hide_last = 0;
  std::int64_t cycle = 0;

  static MaskSpec none() { return {}; }
  static MaskSpec directional(std::set<std::string> dirs) { return {Kind::kDirectional, std::move(dirs), 0, 0}; }
  static MaskSpec temporal(std::int64_t hide_last, std::int64_t cycle) { return {Kind::kTemporal, {}, hide_last, cycle}; }

  void validate(const InterchangeSpec& spec) const;
  std::string describe() const;

  nlohmann::json to_json() const;
  static MaskSpec from_json(const nlohmann::json& doc);
};

struct MaskedWindow {
  torch::Tensor values;
  /// 1 = observed, 0 = masked; same shape as values.
  torch::Tensor observed;
};

/// Observation indicator of shape [steps, M, 2F] (float, 0/1).
torch::Tensor observation_indicator(std::int64_t steps, const MaskSpec& mask, const InterchangeSpec& spec);

/// Masks a normalized fused window of shape [..., steps, M, 2F]. Masked entries
/// become exactly 0 regardless of their prior value (NaN included).
MaskedWindow apply_mask(const torch::Tensor& window, const MaskSpec& mask, const InterchangeSpec& spec);

struct WindowConfig {
  std::int64_t input_len = 12;   // T
  std::int64_t long_len = 288;   // T_long
  std::int64_t horizon = 12;     // S
};

/// Sliding windows (stride 1) over one normalized split. Windows are views,
/// not copies. Sample k covers long input steps [k, k+T_long), short input
/// [k+T_long-T, k+T_long) and targets [k+T_long, k+T_long+S).
class SampleSet {
 public:
  SampleSet() = default;
  SampleSet(torch::Tensor inputs, torch::Tensor ramps_norm, torch::Tensor ramps_raw, WindowConfig cfg);

  std::int64_t size() const { return count_; }
  const WindowConfig& config() const { return cfg_; }
  std::int64_t num_nodes() const { return inputs_.size(1); }
  std::int64_t channels() const { return inputs_.size(2); }

  torch::Tensor long_input(std::int64_t k) const;    // [T_long, M, C]
  torch::Tensor input(std::int64_t k) const;         // [T, M, C]
  torch::Tensor long_ramps(std::int64_t k) const;    // [T_long, M, 1] normalized
  torch::Tensor target(std::int64_t k) const;        // [S, M, 1] normalized
  torch::Tensor target_raw(std::int64_t k) const;    // [S, M, 1] raw volume

  /// Stacks the selected samples along a new leading batch axis.
  torch::Tensor long_inputs(const std::vector<std::int64_t>& idx) const;
  torch::Tensor inputs(const std::vector<std::int64_t>& idx) const;
  torch::Tensor long_ramps(const std::vector<std::int64_t>& idx) const;
  torch::Tensor targets(const std::vector<std::int64_t>& idx) const;
  torch::Tensor targets_raw(const std::vector<std::int64_t>& idx) const;

 private:
  torch::Tensor inputs_;      // [steps, M, C] float32, normalized
  torch::Tensor ramps_norm_;  // [steps, M, 1] float32
  torch::Tensor ramps_raw_;   // [steps, M, 1] float64
  WindowConfig cfg_;
  std::int64_t count_ = 0;
};

SampleSet make_samples(const FusedSeries& fused_norm, const torch::Tensor& ramps_norm, const RampSeries& ramps_raw,
                       WindowConfig cfg);

/// Everything needed to train and evaluate on one interchange.
struct Dataset {
  InterchangeSpec spec;
  MainlineSeries mainline;
  RampSeries ramps;

  void validate() const;
};

/// Directory layout: meta.json, mainline.csv, ramp.csv.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& data, const std::filesystem::path& dir);

struct PreparedData {
  InterchangeSpec spec;
  Normalizer normalizer;
  WindowConfig windows;
  SplitRanges ranges;
  SampleSet train;
  SampleSet val;
  SampleSet test;
};

/// Fuse, split 17:3:3 by days, fit the normalizer on train, and window each
/// split independently.
PreparedData prepare(const Dataset& data, WindowConfig windows, std::array<int, 3> ratio = {17, 3, 3});

}  // namespace ramp_stdae
