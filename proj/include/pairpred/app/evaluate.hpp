#pragma once

#include <vector>

#include "pairpred/app/trainer.hpp"
#include "pairpred/metrics.hpp"

namespace pairpred::app {

struct EvaluationResult {
  metrics::MetricsReport model;
  metrics::MetricsReport baseline;  // constant velocity
  std::vector<metrics::ModeTrajectories> predictions;  // truncated to the horizon
  std::vector<metrics::GroundTruth> truths;
};

/// Scores the model and the constant-velocity baseline on every scene at a
/// 3 s or 5 s horizon. Never modifies the model.
EvaluationResult evaluate_model(const mapformer::MapFormer& model, const SceneSet& scenes, int horizon_s);

}  // namespace pairpred::app
