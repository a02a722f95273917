#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pairpred/scenedata.hpp"

namespace pairpred::metrics {

inline constexpr double kMissThreshold = 2.0;  // m, strict

/// Multimodal joint prediction for one scene, [M, A, T, 2].
struct ModeTrajectories {
  std::size_t n_modes = 0;
  std::size_t n_agents = 0;
  std::size_t t = 0;
  std::vector<double> xy;

  double at(std::size_t m, std::size_t a, std::size_t step, std::size_t k) const {
    return xy[((m * n_agents + a) * t + step) * 2 + k];
  }
};

/// Ground truth, [A, T, 2]. An empty `valid` means every step is valid.
struct GroundTruth {
  std::size_t n_agents = 0;
  std::size_t t = 0;
  std::vector<double> xy;
  std::vector<std::uint8_t> valid;  // [A, T]

  double at(std::size_t a, std::size_t step, std::size_t k) const { return xy[(a * t + step) * 2 + k]; }
  bool is_valid(std::size_t a, std::size_t step) const { return valid.empty() || valid[a * t + step] != 0; }
};

/// Per-mode scene-averaged displacement errors.
std::vector<double> scene_ade_per_mode(const ModeTrajectories& pred, const GroundTruth& gt);
std::vector<double> scene_fde_per_mode(const ModeTrajectories& pred, const GroundTruth& gt);

double min_sade(const ModeTrajectories& pred, const GroundTruth& gt);
double min_sfde(const ModeTrajectories& pred, const GroundTruth& gt);
/// Mode with the lowest SFDE; ties go to the lowest index.
std::size_t best_sfde_mode(const ModeTrajectories& pred, const GroundTruth& gt);
/// True when some agent's FDE in the best-SFDE mode exceeds 2 m.
bool is_miss(const ModeTrajectories& pred, const GroundTruth& gt);
double smr(std::span<const ModeTrajectories> preds, std::span<const GroundTruth> gts);

/// Ground truth of a windowed sample truncated to the first `t` future steps.
GroundTruth ground_truth(const scenedata::SceneSample& sample, std::size_t t);

/// Extrapolates each agent's last observed velocity (speed along heading),
/// [1, A, t, 2].
ModeTrajectories constant_velocity_baseline(const scenedata::SceneSample& sample, std::size_t t);

/// Keeps the first `t` steps of every mode.
ModeTrajectories truncate(const ModeTrajectories& pred, std::size_t t);

struct MetricsReport {
  double horizon_s = 0.0;
  double min_sade = 0.0;
  double min_sfde = 0.0;
  double smr = 0.0;
  std::size_t n_scenes = 0;
};

/// Scene-averaged minSADE/minSFDE and the miss rate over all scenes.
MetricsReport evaluate_scenes(double horizon_s, std::span<const ModeTrajectories> preds,
                              std::span<const GroundTruth> gts);

/// `horizon_s,min_sade,min_sfde,smr,n_scenes`, one row per report.
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsReport> reports);

}  // namespace pairpred::metrics
