#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace pairpred::scenedata {

inline constexpr double kFrameRateHz = 5.0;
inline constexpr double kFrameDt = 1.0 / kFrameRateHz;
inline constexpr std::size_t kHistorySteps = 5;
inline constexpr std::size_t kMinAgents = 2;
inline constexpr std::size_t kMaxAgents = 25;
// x, y, cos(heading), sin(heading), speed, is_vehicle, is_pedestrian
inline constexpr std::size_t kAgentFeatures = 7;

enum class AgentClass { unknown, vehicle, pedestrian };

struct TrackPoint {
  std::int64_t track_id = 0;
  std::int64_t frame = 0;
  double x = 0.0;  // meters
  double y = 0.0;
  double heading = 0.0;  // radians
  double speed = 0.0;    // m/s, >= 0
};

/// One agent's trajectory; frames are consecutive integers.
struct Track {
  std::int64_t id = 0;
  AgentClass cls = AgentClass::unknown;
  std::vector<TrackPoint> points;

  std::int64_t first_frame() const { return points.front().frame; }
  std::int64_t last_frame() const { return points.back().frame; }
  bool covers(std::int64_t frame) const {
    return !points.empty() && frame >= first_frame() && frame <= last_frame();
  }
  const TrackPoint& at_frame(std::int64_t frame) const {
    return points[static_cast<std::size_t>(frame - first_frame())];
  }
};

/// Reads a `track_id,frame,x,y[,heading,speed][,class]` CSV. Rows may be
/// interleaved; output is sorted by id then frame. Throws ParseError for a
/// malformed row and ValidationError for gaps or repeated frames.
std::vector<Track> load_tracks(const std::filesystem::path& csv_path);
std::vector<Track> parse_tracks(std::istream& in);
void write_tracks(const std::filesystem::path& csv_path, const std::vector<Track>& tracks);

/// Keeps every `factor`-th frame (frame % factor == 0) and renumbers
/// frames to frame / factor. Converts e.g. 25 Hz recordings to 5 Hz.
std::vector<Track> resample_tracks(const std::vector<Track>& tracks, int factor);

/// A yield decision (label 1) or a checked non-conflict (label 0) between
/// an entering agent `agent_a` and a circulating agent `agent_b`.
struct InteractionLabel {
  std::int64_t frame = 0;
  std::int64_t agent_a = 0;
  std::int64_t agent_b = 0;
  int label = 0;
};

std::vector<InteractionLabel> load_labels(const std::filesystem::path& csv_path);
void write_labels(const std::filesystem::path& csv_path, const std::vector<InteractionLabel>& labels);

// ---------------------------------------------------------------------------
// Synthetic roundabout

struct SynthConfig {
  int n_agents = 20;
  double ring_radius = 20.0;  // m
  int entry_arms = 4;
  double gap_accept_s = 2.0;
  double noise_std = 0.05;  // m, applied to recorded positions
  std::uint64_t seed = 1;

  /// Throws ValidationError when a field is out of range.
  void validate() const;
};

struct RoundaboutGeometry {
  double ring_radius = 20.0;
  int entry_arms = 4;
  double approach_length = 40.0;
  double exit_length = 30.0;
  double lane_offset = 3.0;  // lateral separation of entry and exit lanes

  double arm_angle(int arm) const;
  /// Ring angle where arm `arm`'s entry lane merges.
  double merge_angle(int arm) const;
  /// Ring angle where arm `arm`'s exit lane departs.
  double diverge_angle(int arm) const;
};

enum class AgentRole { entering, circulating };

struct AgentPlan {
  std::int64_t id = 0;
  AgentRole role = AgentRole::entering;
  std::int64_t spawn_frame = 0;
  int entry_arm = 0;           // entering agents
  double start_angle = 0.0;    // circulating agents, radians on the ring
  int exit_arm = 1;
  double initial_speed = 7.0;  // m/s
  double desired_speed = 7.0;  // m/s
};

struct SynthResult {
  std::vector<Track> tracks;
  std::vector<InteractionLabel> labels;
};

/// Per-frame standard deviation (m/s) of the mean-reverting perturbation
/// of each agent's desired speed.
inline constexpr double kSpeedJitter = 0.15;

struct SimOptions {
  double speed_jitter = kSpeedJitter;
  /// When >= 0, the random stream is reseeded with fork_seed at the start
  /// of this frame: runs that differ only in fork_seed share every earlier
  /// frame exactly and diverge afterwards.
  std::int64_t fork_frame = -1;
  std::uint64_t fork_seed = 0;
};

/// Agent plans drawn from the config, plus the seed of the simulation run.
struct SynthPlan {
  RoundaboutGeometry geometry;
  std::vector<AgentPlan> plans;
  std::uint64_t sim_seed = 0;
};

SynthPlan plan_roundabout(const SynthConfig& cfg);

/// Deterministic for a fixed seed.
SynthResult synth_roundabout(const SynthConfig& cfg, const SimOptions& opts = {});

/// Runs the kinematic model for explicit plans. `seed` drives position
/// noise and speed fluctuations.
SynthResult simulate_roundabout(const RoundaboutGeometry& geometry, const std::vector<AgentPlan>& plans,
                                double gap_accept_s, double noise_std, std::uint64_t seed,
                                const SimOptions& opts = {});

RoundaboutGeometry geometry_for(const SynthConfig& cfg);

// ---------------------------------------------------------------------------
// Windowing

/// One prediction instance. Positions are relative to `origin`, the
/// centroid of the included agents at the current (last history) frame.
struct SceneSample {
  std::vector<std::int64_t> agent_ids;
  std::size_t t_h = kHistorySteps;
  std::size_t t_f = 0;
  std::vector<double> history;       // [A, t_h, kAgentFeatures]
  std::vector<double> future_gt;     // [A, t_f, 2]
  std::vector<std::uint8_t> valid;   // [A, t_h + t_f]
  std::size_t ego_index = 0;
  std::string map_ref;
  std::int64_t anchor_frame = 0;     // current frame
  double origin_x = 0.0;
  double origin_y = 0.0;

  std::size_t n_agents() const { return agent_ids.size(); }
  double hist(std::size_t a, std::size_t t, std::size_t f) const {
    return history[(a * t_h + t) * kAgentFeatures + f];
  }
  double future(std::size_t a, std::size_t t, std::size_t k) const { return future_gt[(a * t_f + t) * 2 + k]; }
  bool valid_at(std::size_t a, std::size_t t) const { return valid[a * (t_h + t_f) + t] != 0; }
  bool future_valid(std::size_t a, std::size_t t) const { return valid_at(a, t_h + t); }
  double current_x(std::size_t a) const { return hist(a, t_h - 1, 0); }
  double current_y(std::size_t a) const { return hist(a, t_h - 1, 1); }
};

/// Slides a window of t_h + t_f frames over the frame grid starting at the
/// earliest frame. A window is emitted when at least two agents are present
/// for the whole window; agents present only at the current frame are
/// included with masks. Returns an empty list when no window qualifies.
std::vector<SceneSample> window_scenes(const std::vector<Track>& tracks, std::size_t t_h, std::size_t t_f,
                                       std::size_t stride, const std::string& map_ref = "");

}  // namespace pairpred::scenedata
