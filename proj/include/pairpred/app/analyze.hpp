#pragma once

#include <filesystem>
#include <vector>

#include "pairpred/app/trainer.hpp"
#include "pairpred/interaction.hpp"

namespace pairpred::app {

inline constexpr const char* kDependencyFile = "dependency.csv";

/// Dependency records for every scene, in scene order.
std::vector<interaction::SceneRecords> scene_records(const mapformer::MapFormer& model, const SceneSet& scenes,
                                                     interaction::ModeSelection selection);

struct AnalysisResult {
  std::vector<interaction::SceneRecords> scenes;
  std::vector<std::filesystem::path> plots;
};

/// Writes dependency.csv and one scene_NNNN.svg per scene into out_dir.
AnalysisResult analyze_model(const mapformer::MapFormer& model, const SceneSet& scenes,
                             const std::filesystem::path& out_dir,
                             interaction::ModeSelection selection = interaction::ModeSelection::best_sfde);

struct InteractionSeparation {
  std::vector<double> interacting;  // pairs with a yield label in the window
  std::vector<double> checked;      // pairs with only checked non-conflict labels
  std::vector<double> unlabeled;    // pairs the simulator never related
  double auc = 0.0;          // interacting vs checked + unlabeled; NaN when a side is empty
  double auc_checked = 0.0;  // interacting vs checked only
};

/// Splits ego-pair scores by the synthetic interaction labels.
InteractionSeparation interaction_separation(const SceneSet& scenes,
                                             const std::vector<interaction::SceneRecords>& records);

}  // namespace pairpred::app
