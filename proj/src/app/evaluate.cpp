#include "pairpred/app/evaluate.hpp"

#include "pairpred/errors.hpp"
#include "pairpred/interaction.hpp"

namespace pairpred::app {

EvaluationResult evaluate_model(const mapformer::MapFormer& model, const SceneSet& scenes, int horizon_s) {
  const std::size_t steps = horizon_steps(horizon_s);
  if (steps > model.config().t_f) throw ValidationError("horizon exceeds the model's prediction length");
  if (scenes.size() == 0) throw ValidationError("no scenes to evaluate");
  diff::NoGradGuard no_grad;
  EvaluationResult r;
  std::vector<metrics::ModeTrajectories> baseline;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& s = scenes.samples[i];
    const auto pred = model.predict(s, graph_for(model, scenes, i));
    r.predictions.push_back(metrics::truncate(interaction::mode_trajectories(pred), steps));
    r.truths.push_back(metrics::ground_truth(s, steps));
    baseline.push_back(metrics::constant_velocity_baseline(s, steps));
  }
  r.model = metrics::evaluate_scenes(horizon_s, r.predictions, r.truths);
  r.baseline = metrics::evaluate_scenes(horizon_s, baseline, r.truths);
  return r;
}

}  // namespace pairpred::app
