#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pairpred/mapformer/model.hpp"
#include "pairpred/scenedata.hpp"

namespace pairpred::app {

struct DataConfig {
  std::string dir;           // dataset directory; empty means synthesize in memory
  std::size_t stride = 5;    // frames between window starts
  double map_spacing = 2.0;  // m between road nodes of generated maps
  std::size_t max_scenes = 0;  // 0 keeps every window
};

struct TrainingConfig {
  double lr = 3e-4;
  std::size_t batch_size = 8;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  bool wta = true;
  double mode_ce_weight = 0.1;

  void validate() const;
};

struct RunConfig {
  DataConfig data;
  scenedata::SynthConfig synth;
  mapformer::ModelConfig model;
  TrainingConfig training;
  std::vector<int> horizons{3};  // seconds

  void validate() const;
};

/// Prediction steps for a horizon in seconds; only 3 and 5 are supported.
std::size_t horizon_steps(int horizon_s);

/// Parses the JSON run configuration. Every section and key is optional;
/// unknown keys throw ValidationError. A relative data.dir is resolved
/// against `base_dir`.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
std::string to_json(const RunConfig& cfg);

}  // namespace pairpred::app
