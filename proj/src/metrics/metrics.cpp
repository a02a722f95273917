#include "pairpred/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "pairpred/errors.hpp"

namespace pairpred::metrics {

namespace {

void check_shapes(const ModeTrajectories& pred, const GroundTruth& gt) {
  if (pred.n_modes == 0) throw DimensionError("prediction has no modes");
  if (pred.t == 0 || gt.t == 0) throw DimensionError("metrics need at least one time step");
  if (pred.n_agents != gt.n_agents || pred.t != gt.t) {
    throw DimensionError("prediction [" + std::to_string(pred.n_agents) + "," + std::to_string(pred.t) +
                         "] does not match ground truth [" + std::to_string(gt.n_agents) + "," +
                         std::to_string(gt.t) + "]");
  }
  if (pred.xy.size() != pred.n_modes * pred.n_agents * pred.t * 2 || gt.xy.size() != gt.n_agents * gt.t * 2) {
    throw DimensionError("trajectory buffer size does not match its shape");
  }
  if (!gt.valid.empty() && gt.valid.size() != gt.n_agents * gt.t) {
    throw DimensionError("validity mask size does not match ground truth");
  }
}

double dist(const ModeTrajectories& pred, const GroundTruth& gt, std::size_t m, std::size_t a, std::size_t t) {
  const double dx = pred.at(m, a, t, 0) - gt.at(a, t, 0);
  const double dy = pred.at(m, a, t, 1) - gt.at(a, t, 1);
  return std::sqrt(dx * dx + dy * dy);
}

// Last valid step of agent a, or gt.t when it has none.
std::size_t endpoint(const GroundTruth& gt, std::size_t a) {
  for (std::size_t t = gt.t; t-- > 0;)
    if (gt.is_valid(a, t)) return t;
  return gt.t;
}

std::size_t argmin(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::vector<double> scene_ade_per_mode(const ModeTrajectories& pred, const GroundTruth& gt) {
  check_shapes(pred, gt);
  std::vector<double> out(pred.n_modes);
  for (std::size_t m = 0; m < pred.n_modes; ++m) {
    double total = 0.0;
    std::size_t agents = 0;
    for (std::size_t a = 0; a < gt.n_agents; ++a) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t t = 0; t < gt.t; ++t) {
        if (!gt.is_valid(a, t)) continue;
        sum += dist(pred, gt, m, a, t);
        ++n;
      }
      if (n == 0) continue;
      total += sum / static_cast<double>(n);
      ++agents;
    }
    if (agents == 0) throw ValidationError("scene has no valid future step");
    out[m] = total / static_cast<double>(agents);
  }
  return out;
}

std::vector<double> scene_fde_per_mode(const ModeTrajectories& pred, const GroundTruth& gt) {
  check_shapes(pred, gt);
  std::vector<double> out(pred.n_modes);
  for (std::size_t m = 0; m < pred.n_modes; ++m) {
    double total = 0.0;
    std::size_t agents = 0;
    for (std::size_t a = 0; a < gt.n_agents; ++a) {
      const std::size_t t = endpoint(gt, a);
      if (t == gt.t) continue;
      total += dist(pred, gt, m, a, t);
      ++agents;
    }
    if (agents == 0) throw ValidationError("scene has no valid future step");
    out[m] = total / static_cast<double>(agents);
  }
  return out;
}

double min_sade(const ModeTrajectories& pred, const GroundTruth& gt) {
  const auto v = scene_ade_per_mode(pred, gt);
  return *std::min_element(v.begin(), v.end());
}

double min_sfde(const ModeTrajectories& pred, const GroundTruth& gt) {
  const auto v = scene_fde_per_mode(pred, gt);
  return *std::min_element(v.begin(), v.end());
}

std::size_t best_sfde_mode(const ModeTrajectories& pred, const GroundTruth& gt) {
  return argmin(scene_fde_per_mode(pred, gt));
}

bool is_miss(const ModeTrajectories& pred, const GroundTruth& gt) {
  const std::size_t m = best_sfde_mode(pred, gt);
  for (std::size_t a = 0; a < gt.n_agents; ++a) {
    const std::size_t t = endpoint(gt, a);
    if (t != gt.t && dist(pred, gt, m, a, t) > kMissThreshold) return true;
  }
  return false;
}

double smr(std::span<const ModeTrajectories> preds, std::span<const GroundTruth> gts) {
  if (preds.empty()) throw ValidationError("miss rate needs at least one scene");
  if (preds.size() != gts.size()) throw DimensionError("prediction and ground-truth scene counts differ");
  std::size_t misses = 0;
  for (std::size_t s = 0; s < preds.size(); ++s) misses += is_miss(preds[s], gts[s]) ? 1 : 0;
  return static_cast<double>(misses) / static_cast<double>(preds.size());
}

GroundTruth ground_truth(const scenedata::SceneSample& sample, std::size_t t) {
  if (t == 0 || t > sample.t_f) throw DimensionError("horizon exceeds the sample's future window");
  GroundTruth gt;
  gt.n_agents = sample.n_agents();
  gt.t = t;
  for (std::size_t a = 0; a < gt.n_agents; ++a)
    for (std::size_t s = 0; s < t; ++s) {
      gt.xy.push_back(sample.future(a, s, 0));
      gt.xy.push_back(sample.future(a, s, 1));
      gt.valid.push_back(sample.future_valid(a, s) ? 1 : 0);
    }
  return gt;
}

ModeTrajectories constant_velocity_baseline(const scenedata::SceneSample& sample, std::size_t t) {
  ModeTrajectories out;
  out.n_modes = 1;
  out.n_agents = sample.n_agents();
  out.t = t;
  const std::size_t last = sample.t_h - 1;
  for (std::size_t a = 0; a < out.n_agents; ++a) {
    const double speed = sample.hist(a, last, 4);
    const double vx = speed * sample.hist(a, last, 2), vy = speed * sample.hist(a, last, 3);
    for (std::size_t s = 0; s < t; ++s) {
      const double dt = static_cast<double>(s + 1) * scenedata::kFrameDt;
      out.xy.push_back(sample.current_x(a) + vx * dt);
      out.xy.push_back(sample.current_y(a) + vy * dt);
    }
  }
  return out;
}

ModeTrajectories truncate(const ModeTrajectories& pred, std::size_t t) {
  if (t > pred.t) throw DimensionError("cannot truncate to a longer horizon");
  ModeTrajectories out{pred.n_modes, pred.n_agents, t, {}};
  for (std::size_t m = 0; m < pred.n_modes; ++m)
    for (std::size_t a = 0; a < pred.n_agents; ++a)
      for (std::size_t s = 0; s < t; ++s) {
        out.xy.push_back(pred.at(m, a, s, 0));
        out.xy.push_back(pred.at(m, a, s, 1));
      }
  return out;
}

MetricsReport evaluate_scenes(double horizon_s, std::span<const ModeTrajectories> preds,
                              std::span<const GroundTruth> gts) {
  MetricsReport r;
  r.horizon_s = horizon_s;
  r.n_scenes = preds.size();
  r.smr = smr(preds, gts);
  for (std::size_t s = 0; s < preds.size(); ++s) {
    r.min_sade += min_sade(preds[s], gts[s]);
    r.min_sfde += min_sfde(preds[s], gts[s]);
  }
  r.min_sade /= static_cast<double>(preds.size());
  r.min_sfde /= static_cast<double>(preds.size());
  return r;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsReport> reports) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "horizon_s,min_sade,min_sfde,smr,n_scenes\n";
  char buf[160];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof(buf), "%g,%.17g,%.17g,%.17g,%zu\n", r.horizon_s, r.min_sade, r.min_sfde, r.smr,
                  r.n_scenes);
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace pairpred::metrics
