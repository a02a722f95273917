#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "pairpred/errors.hpp"
#include "pairpred/interaction.hpp"

namespace pairpred::interaction {

double dependency_score(const paircov::PairCovariance& c) {
  const auto blocks = paircov::marginal_blocks(c);
  double s = 0.0;
  for (const auto& row : blocks.cross)
    for (double v : row) s += std::abs(v);
  return s;
}

std::vector<DependencyRecord> rank_pairs(std::vector<DependencyRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const DependencyRecord& a, const DependencyRecord& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.other_id < b.other_id;
  });
  return records;
}

metrics::ModeTrajectories mode_trajectories(const mapformer::PredictionOutput& pred) {
  return {pred.n_modes, pred.n_agents, pred.t_f, pred.traj};
}

namespace {

double step_score(const mapformer::PredictionOutput& pred, std::size_t m, std::size_t pair, std::size_t t) {
  const auto p = paircov::CovParams::from_span({pred.cov_at(m, pair, t), paircov::kParamCount});
  return dependency_score(paircov::build_sigma(p));
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::vector<DependencyRecord> dependency_records(const scenedata::SceneSample& sample,
                                                 const mapformer::PredictionOutput& pred, ModeSelection selection) {
  if (pred.n_agents != sample.n_agents()) throw DimensionError("prediction and sample agent counts differ");
  std::vector<DependencyRecord> out;
  std::vector<double> weights(pred.n_modes, 0.0);
  std::int64_t mode = kWeightedMode;
  if (selection == ModeSelection::best_sfde) {
    mode = static_cast<std::int64_t>(
        metrics::best_sfde_mode(mode_trajectories(pred), metrics::ground_truth(sample, pred.t_f)));
    weights[static_cast<std::size_t>(mode)] = 1.0;
  } else {
    weights = pred.mode_probabilities();
  }
  for (std::size_t pair = 0; pair < pred.others.size(); ++pair) {
    DependencyRecord r;
    r.ego_id = sample.agent_ids[pred.ego_index];
    r.other_id = sample.agent_ids[pred.others[pair]];
    r.mode = mode;
    r.per_step_scores.assign(pred.t_f, 0.0);
    for (std::size_t t = 0; t < pred.t_f; ++t) {
      if (mode != kWeightedMode) {
        r.per_step_scores[t] = step_score(pred, static_cast<std::size_t>(mode), pair, t);
        continue;
      }
      for (std::size_t m = 0; m < pred.n_modes; ++m) r.per_step_scores[t] += weights[m] * step_score(pred, m, pair, t);
    }
    r.score = mean(r.per_step_scores);
    out.push_back(std::move(r));
  }
  return out;
}

void write_dependency_csv(const std::filesystem::path& path, std::span<const SceneRecords> scenes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "scene,ego_id,other_id,mode,score\n";
  char buf[128];
  for (const auto& s : scenes)
    for (const auto& r : s.records) {
      std::snprintf(buf, sizeof(buf), "%zu,%lld,%lld,%lld,%.17g\n", s.scene, static_cast<long long>(r.ego_id),
                    static_cast<long long>(r.other_id), static_cast<long long>(r.mode), r.score);
      out << buf;
    }
  if (!out) throw IoError("write failed: " + path.string());
}

int pair_label(const scenedata::SceneSample& sample, std::span<const scenedata::InteractionLabel> labels,
               std::int64_t a, std::int64_t b) {
  const std::int64_t first = sample.anchor_frame - static_cast<std::int64_t>(sample.t_h) + 1;
  const std::int64_t last = sample.anchor_frame + static_cast<std::int64_t>(sample.t_f);
  int label = -1;
  for (const auto& l : labels) {
    if (l.frame < first || l.frame > last) continue;
    if (!((l.agent_a == a && l.agent_b == b) || (l.agent_a == b && l.agent_b == a))) continue;
    label = std::max(label, l.label);
  }
  return label;
}

double ranking_auc(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) throw ValidationError("AUC needs positives and negatives");
  std::vector<double> neg(negatives.begin(), negatives.end());
  std::sort(neg.begin(), neg.end());
  double wins = 0.0;
  for (double p : positives) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(neg.begin(), neg.end(), p);
    wins += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(positives.size()) * static_cast<double>(neg.size()));
}

}  // namespace pairpred::interaction
