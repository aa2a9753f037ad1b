#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <torch/torch.h>

#include "ramp_stdae/dataset.hpp"
#include "ramp_stdae/stdae.hpp"
#include "ramp_stdae/synth.hpp"
#include "ramp_stdae/topology.hpp"

namespace test {

inline double max_abs_diff(const torch::Tensor& a, const torch::Tensor& b) {
  return (a.to(torch::kFloat64) - b.to(torch::kFloat64)).abs().max().item<double>();
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("ramp_stdae_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Small STDAE used by tests that do not need the full default dimensions.
inline ramp_stdae::StdaeConfig small_stdae(std::int64_t nodes = 12, std::int64_t t_long = 48) {
  ramp_stdae::StdaeConfig c;
  c.num_nodes = nodes;
  c.t_long = t_long;
  c.patch_len = 12;
  c.embed_dim = 16;
  c.n_encoder_layers = 2;
  c.heads = 2;
  return c;
}

/// Synthetic data on the default interchange at a coarse interval, so one
/// day is 96 steps.
inline ramp_stdae::Dataset coarse_synth(double noise, std::uint64_t seed = 0, std::int64_t days = 23) {
  ramp_stdae::SynthConfig cfg;
  cfg.days = days;
  cfg.interval_sec = 900;
  cfg.noise_std = noise;
  cfg.seed = seed;
  return ramp_stdae::generate(ramp_stdae::default_interchange(900), cfg);
}

}  // namespace test
