#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pairpred/errors.hpp"
#include "pairpred/scenedata.hpp"

namespace pairpred::scenedata {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAccel = 2.0;          // m/s^2
constexpr double kBrake = 4.0;          // m/s^2, comfortable
constexpr double kHardBrake = 7.0;      // m/s^2, car following
constexpr double kYieldZone = 30.0;     // m before the merge point
constexpr double kConflictHorizon = 60.0;  // m of ring upstream of the merge point
constexpr double kStopLine = 1.0;       // m before the merge point
constexpr double kStandstillGap = 6.0;  // m
constexpr double kHeadway = 1.2;        // s
constexpr double kMinDesired = 3.0;
constexpr double kMaxDesired = 10.0;
constexpr std::int64_t kMaxFrames = 200000;

double wrap_positive(double angle) {
  double a = std::fmod(angle, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

struct Vec2 {
  double x = 0.0, y = 0.0;
};

Vec2 unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

// Entry line (optional) -> counter-clockwise arc -> exit line.
struct Path {
  Vec2 entry_start, entry_dir;
  double entry_len = 0.0;
  double arc_start = 0.0;  // ring angle
  double arc_span = 0.0;   // radians, counter-clockwise
  double radius = 0.0;
  Vec2 exit_start, exit_dir;
  double exit_len = 0.0;

  double arc_len() const { return arc_span * radius; }
  double total() const { return entry_len + arc_len() + exit_len; }

  struct Pose {
    Vec2 pos;
    double heading;
  };

  Pose pose(double s) const {
    if (s < entry_len) {
      return {{entry_start.x + entry_dir.x * s, entry_start.y + entry_dir.y * s}, std::atan2(entry_dir.y, entry_dir.x)};
    }
    s -= entry_len;
    if (s < arc_len()) {
      const double ang = arc_start + s / radius;
      const Vec2 u = unit(ang);
      return {{radius * u.x, radius * u.y}, std::remainder(ang + std::numbers::pi / 2, kTwoPi)};
    }
    s = std::min(s - arc_len(), exit_len);
    return {{exit_start.x + exit_dir.x * s, exit_start.y + exit_dir.y * s}, std::atan2(exit_dir.y, exit_dir.x)};
  }

  bool on_entry(double s) const { return s < entry_len; }
  bool on_arc(double s) const { return s >= entry_len && s < entry_len + arc_len(); }
  double ring_angle(double s) const { return wrap_positive(arc_start + (s - entry_len) / radius); }
  double arc_remaining(double s) const { return entry_len + arc_len() - s; }
};

double arc_span_between(double from, double to) {
  double span = wrap_positive(to - from);
  if (span < 1e-6) span += kTwoPi;
  return span;
}

Path make_path(const RoundaboutGeometry& g, const AgentPlan& plan) {
  Path p;
  p.radius = g.ring_radius;
  if (plan.role == AgentRole::entering) {
    const double merge = g.merge_angle(plan.entry_arm);
    const Vec2 in = unit(merge);
    const Vec2 arm = unit(g.arm_angle(plan.entry_arm));
    p.entry_len = g.approach_length;
    p.entry_start = {g.ring_radius * in.x + g.approach_length * arm.x, g.ring_radius * in.y + g.approach_length * arm.y};
    p.entry_dir = {-arm.x, -arm.y};
    p.arc_start = merge;
  } else {
    p.arc_start = wrap_positive(plan.start_angle);
  }
  const double diverge = g.diverge_angle(plan.exit_arm);
  p.arc_span = arc_span_between(p.arc_start, diverge);
  const Vec2 out = unit(diverge);
  p.exit_start = {g.ring_radius * out.x, g.ring_radius * out.y};
  p.exit_dir = unit(g.arm_angle(plan.exit_arm));
  p.exit_len = g.exit_length;
  return p;
}

struct AgentState {
  const AgentPlan* plan = nullptr;
  Path path;
  double s = 0.0;
  double v = 0.0;
  double desired_offset = 0.0;  // Ornstein-Uhlenbeck deviation of desired speed
  bool active = false;
  bool done = false;
  Track track;
};

}  // namespace

double RoundaboutGeometry::arm_angle(int arm) const { return kTwoPi * arm / entry_arms; }
double RoundaboutGeometry::merge_angle(int arm) const { return wrap_positive(arm_angle(arm) - lane_offset / ring_radius); }
double RoundaboutGeometry::diverge_angle(int arm) const {
  return wrap_positive(arm_angle(arm) + lane_offset / ring_radius);
}

void SynthConfig::validate() const {
  if (n_agents < static_cast<int>(kMinAgents) || n_agents > static_cast<int>(kMaxAgents)) {
    throw ValidationError("synth.n_agents must be in [2, 25]");
  }
  if (!(ring_radius > 0.0)) throw ValidationError("synth.ring_radius must be > 0");
  if (entry_arms < 1) throw ValidationError("synth.entry_arms must be > 0");
  if (!(gap_accept_s >= 0.0)) throw ValidationError("synth.gap_accept_s must be >= 0");
  if (!(noise_std >= 0.0)) throw ValidationError("synth.noise_std must be >= 0");
}

RoundaboutGeometry geometry_for(const SynthConfig& cfg) {
  RoundaboutGeometry g;
  g.ring_radius = cfg.ring_radius;
  g.entry_arms = cfg.entry_arms;
  return g;
}

SynthResult simulate_roundabout(const RoundaboutGeometry& geometry, const std::vector<AgentPlan>& plans,
                                double gap_accept_s, double noise_std, std::uint64_t seed, const SimOptions& opts) {
  const double speed_jitter = opts.speed_jitter;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<AgentState> agents(plans.size());
  for (std::size_t i = 0; i < plans.size(); ++i) {
    agents[i].plan = &plans[i];
    agents[i].path = make_path(geometry, plans[i]);
    agents[i].v = plans[i].initial_speed;
    agents[i].track.id = plans[i].id;
  }

  SynthResult result;
  const auto all_done = [&] {
    return std::all_of(agents.begin(), agents.end(), [](const AgentState& a) { return a.done; });
  };
  for (std::int64_t frame = 0; !all_done() && frame < kMaxFrames; ++frame) {
    if (frame == opts.fork_frame) rng.seed(opts.fork_seed);
    for (auto& a : agents) {
      if (!a.active && !a.done && a.plan->spawn_frame == frame) a.active = true;
    }

    // Record the current state.
    for (auto& a : agents) {
      if (!a.active) continue;
      const auto pose = a.path.pose(a.s);
      TrackPoint p;
      p.track_id = a.plan->id;
      p.frame = frame;
      p.x = pose.pos.x + (noise_std > 0.0 ? noise_std * normal(rng) : 0.0);
      p.y = pose.pos.y + (noise_std > 0.0 ? noise_std * normal(rng) : 0.0);
      p.heading = pose.heading;
      p.speed = a.v;
      a.track.points.push_back(p);
    }

    // Decide target speeds from the state at this frame.
    std::vector<double> target(agents.size(), 0.0);
    std::vector<bool> yielding(agents.size(), false);
    std::vector<bool> following(agents.size(), false);
    for (std::size_t i = 0; i < agents.size(); ++i) {
      auto& a = agents[i];
      if (!a.active) continue;
      a.desired_offset += -0.5 * a.desired_offset * kFrameDt + speed_jitter * normal(rng);
      double tgt = std::clamp(a.plan->desired_speed + a.desired_offset, kMinDesired, kMaxDesired);

      // Car following on the shared lane (same entry lane, or the ring).
      double gap = INFINITY;
      double leader_v = 0.0;
      for (std::size_t j = 0; j < agents.size(); ++j) {
        const auto& b = agents[j];
        if (j == i || !b.active) continue;
        double d = INFINITY;
        if (a.path.on_entry(a.s) && b.path.on_entry(b.s) && b.plan->entry_arm == a.plan->entry_arm &&
            b.plan->role == AgentRole::entering && a.plan->role == AgentRole::entering && b.s > a.s) {
          d = b.s - a.s;
        } else if (a.path.on_arc(a.s) && b.path.on_arc(b.s)) {
          d = geometry.ring_radius * wrap_positive(b.path.ring_angle(b.s) - a.path.ring_angle(a.s));
          if (d > a.path.arc_remaining(a.s) + 5.0) d = INFINITY;  // a leaves the ring before reaching b
        }
        if (d < gap) {
          gap = d;
          leader_v = b.v;
        }
      }
      if (gap < kStandstillGap + kHeadway * kMaxDesired) {
        const double safe = std::max(0.0, (gap - kStandstillGap) / kHeadway);
        if (safe < tgt) {
          tgt = std::min(tgt, std::max(safe, std::min(leader_v, safe + 1.0)));
          following[i] = true;
        }
      }

      // Gap acceptance at the merge point.
      if (a.plan->role == AgentRole::entering && a.path.on_entry(a.s)) {
        const double dist = a.path.entry_len - a.s;
        if (dist <= kYieldZone) {
          const double t_enter = dist / std::max(a.v, 2.0);
          const double merge = geometry.merge_angle(a.plan->entry_arm);
          for (std::size_t j = 0; j < agents.size(); ++j) {
            const auto& c = agents[j];
            if (j == i || !c.active || !c.path.on_arc(c.s)) continue;
            const double ahead = geometry.ring_radius * wrap_positive(merge - c.path.ring_angle(c.s));
            if (ahead > kConflictHorizon) continue;
            const double t_circ = ahead / std::max(c.v, 0.5);
            const bool conflict = std::abs(t_circ - t_enter) < gap_accept_s;
            result.labels.push_back({frame, a.plan->id, c.plan->id, conflict ? 1 : 0});
            if (conflict) yielding[i] = true;
          }
        }
        if (yielding[i]) tgt = 0.0;
      }
      target[i] = tgt;
    }

    // Integrate.
    for (std::size_t i = 0; i < agents.size(); ++i) {
      auto& a = agents[i];
      if (!a.active) continue;
      if (target[i] > a.v) {
        a.v = std::min(target[i], a.v + kAccel * kFrameDt);
      } else {
        const double brake = following[i] ? kHardBrake : kBrake;
        a.v = std::max(target[i], a.v - brake * kFrameDt);
      }
      double next = a.s + a.v * kFrameDt;
      if (yielding[i]) {
        const double stop = a.path.entry_len - kStopLine;
        if (a.s <= stop && next > stop) {
          next = stop;
          a.v = 0.0;
        }
      }
      a.s = next;
      if (a.s >= a.path.total()) {
        a.active = false;
        a.done = true;
      }
    }
  }

  for (auto& a : agents) {
    if (!a.track.points.empty()) result.tracks.push_back(std::move(a.track));
  }
  std::sort(result.tracks.begin(), result.tracks.end(), [](const Track& x, const Track& y) { return x.id < y.id; });
  return result;
}

SynthPlan plan_roundabout(const SynthConfig& cfg) {
  cfg.validate();
  SynthPlan out;
  out.geometry = geometry_for(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit01(0.0, 1.0);
  double spawn_time = 0.0;
  for (int i = 0; i < cfg.n_agents; ++i) {
    AgentPlan p;
    p.id = i + 1;
    p.spawn_frame = static_cast<std::int64_t>(std::llround(spawn_time / kFrameDt));
    spawn_time += 1.0 + 1.5 * unit01(rng);
    p.role = unit01(rng) < 0.7 ? AgentRole::entering : AgentRole::circulating;
    p.entry_arm = static_cast<int>(unit01(rng) * cfg.entry_arms) % cfg.entry_arms;
    const int hop = cfg.entry_arms > 1 ? 1 + static_cast<int>(unit01(rng) * (cfg.entry_arms - 1)) % (cfg.entry_arms - 1)
                                       : 0;
    p.exit_arm = (p.entry_arm + hop) % cfg.entry_arms;
    p.start_angle = kTwoPi * unit01(rng);
    p.desired_speed = 6.0 + 2.0 * unit01(rng);
    p.initial_speed = p.desired_speed;
    out.plans.push_back(p);
  }
  out.sim_seed = rng();
  return out;
}

SynthResult synth_roundabout(const SynthConfig& cfg, const SimOptions& opts) {
  const auto plan = plan_roundabout(cfg);
  return simulate_roundabout(plan.geometry, plan.plans, cfg.gap_accept_s, cfg.noise_std, plan.sim_seed, opts);
}

}  // namespace pairpred::scenedata
