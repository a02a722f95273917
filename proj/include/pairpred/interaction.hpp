#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pairpred/mapformer/model.hpp"
#include "pairpred/metrics.hpp"
#include "pairpred/paircov.hpp"
#include "pairpred/scenedata.hpp"
#include "pairpred/scenegraph.hpp"

namespace pairpred::interaction {

/// Mode index used for records averaged over modes by probability.
inline constexpr std::int64_t kWeightedMode = -1;

struct DependencyRecord {
  std::int64_t ego_id = 0;
  std::int64_t other_id = 0;
  std::int64_t mode = 0;
  double score = 0.0;  // mean of per_step_scores
  std::vector<double> per_step_scores;
};

/// Sum of absolute values of the ego/other cross-covariance block.
double dependency_score(const paircov::PairCovariance& c);

/// Stable sort by descending score, ties by ascending other_id.
std::vector<DependencyRecord> rank_pairs(std::vector<DependencyRecord> records);

enum class ModeSelection { best_sfde, probability_weighted };

/// One record per ego/other pair of `pred`. With best_sfde the mode is the
/// one with the lowest scene FDE against the sample's ground truth.
std::vector<DependencyRecord> dependency_records(const scenedata::SceneSample& sample,
                                                 const mapformer::PredictionOutput& pred,
                                                 ModeSelection selection = ModeSelection::best_sfde);

/// Multimodal trajectories of a prediction in metrics layout.
metrics::ModeTrajectories mode_trajectories(const mapformer::PredictionOutput& pred);

struct SceneRecords {
  std::size_t scene = 0;
  std::vector<DependencyRecord> records;
};

/// `scene,ego_id,other_id,mode,score`
void write_dependency_csv(const std::filesystem::path& path, std::span<const SceneRecords> scenes);

/// Label of the unordered pair {a, b} over the sample's frame window: 1 if
/// any yield label falls inside it, else 0 if a checked non-conflict does,
/// else -1.
int pair_label(const scenedata::SceneSample& sample, std::span<const scenedata::InteractionLabel> labels,
               std::int64_t a, std::int64_t b);

/// Probability that a random positive outscores a random negative; ties
/// count one half.
double ranking_auc(std::span<const double> positives, std::span<const double> negatives);

struct PlotStyle {
  double pixels_per_meter = 8.0;
  double margin_m = 8.0;
  double min_stroke = 0.75;
  double max_stroke = 8.0;
};

/// Stroke width of a pair line: linear in score, max_score -> max_stroke,
/// zero -> min_stroke.
double stroke_width(double score, double max_score, const PlotStyle& style = {});

/// SVG with road nodes, past tracks, ground truth, the best-SFDE mode and
/// one line from the ego to every other agent scaled by dependency.
void export_scene_plot(const std::filesystem::path& path, const scenedata::SceneSample& sample,
                       const mapformer::PredictionOutput& pred, std::span<const DependencyRecord> records,
                       const scenegraph::RoadGraph* road = nullptr, const PlotStyle& style = {});

}  // namespace pairpred::interaction
