#include "pairpred/app/analyze.hpp"

#include <cstdio>
#include <limits>

namespace pairpred::app {

std::vector<interaction::SceneRecords> scene_records(const mapformer::MapFormer& model, const SceneSet& scenes,
                                                     interaction::ModeSelection selection) {
  diff::NoGradGuard no_grad;
  std::vector<interaction::SceneRecords> out;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto pred = model.predict(scenes.samples[i], graph_for(model, scenes, i));
    out.push_back({i, interaction::rank_pairs(interaction::dependency_records(scenes.samples[i], pred, selection))});
  }
  return out;
}

AnalysisResult analyze_model(const mapformer::MapFormer& model, const SceneSet& scenes,
                             const std::filesystem::path& out_dir, interaction::ModeSelection selection) {
  std::filesystem::create_directories(out_dir);
  diff::NoGradGuard no_grad;
  AnalysisResult r;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& s = scenes.samples[i];
    const auto pred = model.predict(s, graph_for(model, scenes, i));
    auto records = interaction::rank_pairs(interaction::dependency_records(s, pred, selection));
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04zu.svg", i);
    const auto plot = out_dir / name;
    interaction::export_scene_plot(plot, s, pred, records, scenes.road.get());
    r.plots.push_back(plot);
    r.scenes.push_back({i, std::move(records)});
  }
  interaction::write_dependency_csv(out_dir / kDependencyFile, r.scenes);
  return r;
}

InteractionSeparation interaction_separation(const SceneSet& scenes,
                                             const std::vector<interaction::SceneRecords>& records) {
  InteractionSeparation out;
  for (const auto& sr : records) {
    const auto& sample = scenes.samples[sr.scene];
    for (const auto& r : sr.records) {
      const int label = interaction::pair_label(sample, scenes.labels, r.ego_id, r.other_id);
      (label == 1 ? out.interacting : label == 0 ? out.checked : out.unlabeled).push_back(r.score);
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> negatives = out.checked;
  negatives.insert(negatives.end(), out.unlabeled.begin(), out.unlabeled.end());
  out.auc = out.interacting.empty() || negatives.empty() ? nan : interaction::ranking_auc(out.interacting, negatives);
  out.auc_checked =
      out.interacting.empty() || out.checked.empty() ? nan : interaction::ranking_auc(out.interacting, out.checked);
  return out;
}

}  // namespace pairpred::app
