#include <algorithm>
#include <cmath>
#include <limits>

#include "pairpred/errors.hpp"
#include "pairpred/scenedata.hpp"

namespace pairpred::scenedata {

namespace {

constexpr double kEgoTieTolerance = 1e-9;  // m

struct Candidate {
  const Track* track;
  bool full;  // present over the whole window
  double dist = 0.0;
};

void centroid(const std::vector<Candidate>& cands, std::int64_t frame, double& cx, double& cy) {
  cx = cy = 0.0;
  for (const auto& c : cands) {
    const auto& p = c.track->at_frame(frame);
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(cands.size());
  cy /= static_cast<double>(cands.size());
}

}  // namespace

std::vector<SceneSample> window_scenes(const std::vector<Track>& tracks, std::size_t t_h, std::size_t t_f,
                                       std::size_t stride, const std::string& map_ref) {
  if (t_h != kHistorySteps) throw ValidationError("history length must be 5 steps");
  if (t_f != 15 && t_f != 25) throw ValidationError("future length must be 15 or 25 steps");
  if (stride < 1) throw ValidationError("stride must be >= 1");

  std::vector<SceneSample> samples;
  std::vector<const Track*> live;
  for (const auto& t : tracks)
    if (!t.points.empty()) live.push_back(&t);
  if (live.empty()) return samples;

  const auto window = static_cast<std::int64_t>(t_h + t_f);
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  for (const auto* t : live) {
    lo = std::min(lo, t->first_frame());
    hi = std::max(hi, t->last_frame());
  }

  for (std::int64_t start = lo; start + window - 1 <= hi; start += static_cast<std::int64_t>(stride)) {
    const std::int64_t end = start + window - 1;
    const std::int64_t current = start + static_cast<std::int64_t>(t_h) - 1;
    std::vector<Candidate> cands;
    std::size_t n_full = 0;
    for (const auto* t : live) {
      if (!t->covers(current)) continue;
      const bool full = t->covers(start) && t->covers(end);
      n_full += full ? 1 : 0;
      cands.push_back({t, full});
    }
    if (n_full < kMinAgents) continue;
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) { return a.track->id < b.track->id; });

    double cx, cy;
    centroid(cands, current, cx, cy);
    if (cands.size() > kMaxAgents) {
      // Keep the agents nearest the scene centre.
      for (auto& c : cands) {
        const auto& p = c.track->at_frame(current);
        c.dist = std::hypot(p.x - cx, p.y - cy);
      }
      std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        return a.dist < b.dist || (a.dist == b.dist && a.track->id < b.track->id);
      });
      cands.resize(kMaxAgents);
      std::stable_sort(cands.begin(), cands.end(),
                       [](const Candidate& a, const Candidate& b) { return a.track->id < b.track->id; });
      if (std::count_if(cands.begin(), cands.end(), [](const Candidate& c) { return c.full; }) <
          static_cast<std::ptrdiff_t>(kMinAgents)) {
        continue;
      }
      centroid(cands, current, cx, cy);
    }

    SceneSample s;
    s.t_h = t_h;
    s.t_f = t_f;
    s.map_ref = map_ref;
    s.anchor_frame = current;
    s.origin_x = cx;
    s.origin_y = cy;
    const std::size_t A = cands.size();
    s.history.assign(A * t_h * kAgentFeatures, 0.0);
    s.future_gt.assign(A * t_f * 2, 0.0);
    s.valid.assign(A * (t_h + t_f), 0);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < A; ++a) {
      const Track& tr = *cands[a].track;
      s.agent_ids.push_back(tr.id);
      for (std::size_t k = 0; k < t_h + t_f; ++k) {
        const std::int64_t frame = start + static_cast<std::int64_t>(k);
        if (!tr.covers(frame)) continue;
        s.valid[a * (t_h + t_f) + k] = 1;
        const auto& p = tr.at_frame(frame);
        if (k < t_h) {
          double* f = &s.history[(a * t_h + k) * kAgentFeatures];
          f[0] = p.x - cx;
          f[1] = p.y - cy;
          f[2] = std::cos(p.heading);
          f[3] = std::sin(p.heading);
          f[4] = p.speed;
          f[5] = tr.cls == AgentClass::vehicle ? 1.0 : 0.0;
          f[6] = tr.cls == AgentClass::pedestrian ? 1.0 : 0.0;
        } else {
          double* g = &s.future_gt[(a * t_f + (k - t_h)) * 2];
          g[0] = p.x - cx;
          g[1] = p.y - cy;
        }
      }
      // Ego: the fully observed agent closest to the centroid; ids ascend,
      // so a strict comparison keeps the lowest id on ties. Distances within
      // kEgoTieTolerance count as ties so rounding cannot flip the choice.
      if (cands[a].full) {
        const auto& p = tr.at_frame(current);
        const double d = std::hypot(p.x - cx, p.y - cy);
        if (d < best - kEgoTieTolerance) {
          best = d;
          s.ego_index = a;
        }
      }
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace pairpred::scenedata
