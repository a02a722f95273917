#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "pairpred/errors.hpp"
#include "pairpred/scenedata.hpp"

namespace {

using namespace pairpred;
using namespace pairpred::scenedata;

Track straight_track(std::int64_t id, std::int64_t first, std::int64_t last, double x0, double y0, double vx = 1.0,
                     double vy = 0.0) {
  Track t{id, AgentClass::vehicle, {}};
  for (std::int64_t f = first; f <= last; ++f) {
    const double dt = static_cast<double>(f - first) * kFrameDt;
    t.points.push_back({id, f, x0 + vx * dt, y0 + vy * dt, std::atan2(vy, vx), std::hypot(vx, vy)});
  }
  return t;
}

std::size_t brute_force_window_count(const std::vector<Track>& tracks, std::size_t t_f, std::size_t stride) {
  std::int64_t lo = INT64_MAX, hi = INT64_MIN;
  for (const auto& t : tracks) {
    lo = std::min(lo, t.first_frame());
    hi = std::max(hi, t.last_frame());
  }
  const auto w = static_cast<std::int64_t>(5 + t_f);
  std::size_t n = 0;
  for (std::int64_t s = lo; s + w - 1 <= hi; s += static_cast<std::int64_t>(stride)) {
    int full = 0;
    for (const auto& t : tracks) full += (t.first_frame() <= s && t.last_frame() >= s + w - 1) ? 1 : 0;
    if (full >= 2) ++n;
  }
  return n;
}

TEST(ParseTracks, InterleavedRowsAreGroupedAndSorted) {
  std::istringstream in(
      "track_id,frame,x,y,heading,speed,class\n"
      "7,11,1.5,0,0,1,vehicle\n"
      "3,10,0,0,0,0,pedestrian\n"
      "7,10,1.0,0,0,1,vehicle\n"
      "3,11,0,0.5,1.57,0.5,pedestrian\n");
  const auto tracks = parse_tracks(in);
  ASSERT_EQ(tracks.size(), 2u);
  EXPECT_EQ(tracks[0].id, 3);
  EXPECT_EQ(tracks[0].cls, AgentClass::pedestrian);
  EXPECT_EQ(tracks[1].id, 7);
  EXPECT_EQ(tracks[1].points[0].frame, 10);
  EXPECT_EQ(tracks[1].points[1].x, 1.5);
  EXPECT_EQ(tracks[1].cls, AgentClass::vehicle);
}

TEST(ParseTracks, MinimalColumnsDefaultHeadingAndSpeed) {
  std::istringstream in("track_id,frame,x,y\n1,0,2,3\n");
  const auto tracks = parse_tracks(in);
  ASSERT_EQ(tracks.size(), 1u);
  EXPECT_EQ(tracks[0].points[0].heading, 0.0);
  EXPECT_EQ(tracks[0].points[0].speed, 0.0);
}

TEST(ParseTracks, FrameGapIsAValidationError) {
  std::istringstream in("track_id,frame,x,y\n1,0,0,0\n1,1,0,0\n1,3,0,0\n");
  EXPECT_THROW(parse_tracks(in), ValidationError);
  std::istringstream dup("track_id,frame,x,y\n1,0,0,0\n1,0,0,0\n");
  EXPECT_THROW(parse_tracks(dup), ValidationError);
}

TEST(ParseTracks, MalformedRowsReportTheirLine) {
  std::istringstream bad_number("track_id,frame,x,y\n1,0,0,0\n1,1,abc,0\n");
  try {
    parse_tracks(bad_number);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream short_row("track_id,frame,x,y\n1,0,0\n");
  EXPECT_THROW(parse_tracks(short_row), ParseError);
  std::istringstream no_column("track_id,x,y\n1,0,0\n");
  EXPECT_THROW(parse_tracks(no_column), ParseError);
  std::istringstream negative("track_id,frame,x,y,heading,speed\n1,0,0,0,0,-1\n");
  EXPECT_THROW(parse_tracks(negative), ParseError);
  std::istringstream empty("");
  EXPECT_THROW(parse_tracks(empty), ParseError);
}

TEST(Tracks, WriteLoadRoundTrip) {
  SynthConfig cfg;
  cfg.n_agents = 6;
  const auto tracks = synth_roundabout(cfg).tracks;
  const auto path = std::filesystem::temp_directory_path() / "pairpred_tracks_roundtrip.csv";
  write_tracks(path, tracks);
  const auto back = load_tracks(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    EXPECT_EQ(back[i].id, tracks[i].id);
    EXPECT_EQ(back[i].cls, tracks[i].cls);
    ASSERT_EQ(back[i].points.size(), tracks[i].points.size());
    for (std::size_t k = 0; k < tracks[i].points.size(); ++k) {
      const auto& a = back[i].points[k];
      const auto& b = tracks[i].points[k];
      EXPECT_EQ(a.frame, b.frame);
      EXPECT_NEAR(a.x, b.x, 1e-9);
      EXPECT_NEAR(a.y, b.y, 1e-9);
      EXPECT_NEAR(a.heading, b.heading, 1e-9);
      EXPECT_NEAR(a.speed, b.speed, 1e-9);
    }
  }
  EXPECT_THROW(load_tracks("/nonexistent/dir/tracks.csv"), IoError);
}

TEST(Labels, WriteLoadRoundTripAndValidation) {
  const std::vector<InteractionLabel> labels{{4, 1, 2, 1}, {5, 3, 2, 0}};
  const auto path = std::filesystem::temp_directory_path() / "pairpred_labels_roundtrip.csv";
  write_labels(path, labels);
  const auto back = load_labels(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].frame, 5);
  EXPECT_EQ(back[1].agent_a, 3);
  EXPECT_EQ(back[0].label, 1);
  {
    std::ofstream out(path);
    out << "frame,agent_a,agent_b,label\n1,2,3,2\n";
  }
  EXPECT_THROW(load_labels(path), ParseError);
  std::filesystem::remove(path);
}

TEST(Resample, KeepsEveryFactorthFrameAndRenumbers) {
  const std::vector<Track> tracks{straight_track(1, 3, 27, 0, 0)};
  const auto out = resample_tracks(tracks, 5);
  ASSERT_EQ(out.size(), 1u);
  ASSERT_EQ(out[0].points.size(), 5u);  // frames 5, 10, 15, 20, 25
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(out[0].points[i].frame, static_cast<std::int64_t>(i + 1));
    EXPECT_EQ(out[0].points[i].x, tracks[0].points[5 * (i + 1) - 3].x);
  }
  EXPECT_EQ(resample_tracks(tracks, 1)[0].points.size(), tracks[0].points.size());
  EXPECT_THROW(resample_tracks(tracks, 0), ValidationError);
}

TEST(Synth, DeterministicForFixedSeed) {
  SynthConfig cfg;
  cfg.seed = 17;
  const auto a = synth_roundabout(cfg), b = synth_roundabout(cfg);
  ASSERT_EQ(a.tracks.size(), b.tracks.size());
  for (std::size_t i = 0; i < a.tracks.size(); ++i) {
    ASSERT_EQ(a.tracks[i].points.size(), b.tracks[i].points.size());
    for (std::size_t k = 0; k < a.tracks[i].points.size(); ++k) {
      EXPECT_EQ(a.tracks[i].points[k].x, b.tracks[i].points[k].x);
      EXPECT_EQ(a.tracks[i].points[k].y, b.tracks[i].points[k].y);
    }
  }
  ASSERT_EQ(a.labels.size(), b.labels.size());
  cfg.seed = 18;
  const auto c = synth_roundabout(cfg);
  const bool same = c.tracks[0].points.size() == a.tracks[0].points.size() &&
                    c.tracks[0].points[0].x == a.tracks[0].points[0].x;
  EXPECT_FALSE(same);
}

TEST(Synth, ZeroGapAcceptanceNeverYields) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.gap_accept_s = 0.0;
    for (const auto& l : synth_roundabout(cfg).labels) EXPECT_EQ(l.label, 0);
  }
}

TEST(Synth, DefaultConfigProducesBothLabels) {
  SynthConfig cfg;
  const auto r = synth_roundabout(cfg);
  std::set<int> seen;
  for (const auto& l : r.labels) seen.insert(l.label);
  EXPECT_EQ(seen, (std::set<int>{0, 1}));
  EXPECT_EQ(r.tracks.size(), 20u);
}

TEST(Synth, EnteringAgentSlowsForConflictingCirculator) {
  RoundaboutGeometry g;
  const double merge = g.merge_angle(0);
  AgentPlan entering{1, AgentRole::entering, 0, 0, 0.0, 2, 7.0, 7.0};
  // Starts as far upstream of the merge point as the entering agent is from it.
  AgentPlan circulating{2, AgentRole::circulating, 0, 0, merge - g.approach_length / g.ring_radius, 2, 7.0, 7.0};
  const std::vector<AgentPlan> plans{entering, circulating};
  const SimOptions still{0.0};

  const auto min_entry_speed = [&](double gap_accept) {
    const auto r = simulate_roundabout(g, plans, gap_accept, 0.0, 1, still);
    double v = INFINITY;
    for (const auto& p : r.tracks[0].points) {
      if (std::hypot(p.x, p.y) > g.ring_radius + 0.5) v = std::min(v, p.speed);
    }
    return std::pair{v, r.labels};
  };
  const auto [yield_speed, yield_labels] = min_entry_speed(2.0);
  EXPECT_LT(yield_speed, 7.0);
  ASSERT_FALSE(yield_labels.empty());
  EXPECT_EQ(yield_labels.front().agent_a, 1);
  EXPECT_EQ(yield_labels.front().agent_b, 2);
  EXPECT_EQ(yield_labels.front().label, 1);

  const auto [free_speed, free_labels] = min_entry_speed(0.0);
  EXPECT_DOUBLE_EQ(free_speed, 7.0);
  for (const auto& l : free_labels) EXPECT_EQ(l.label, 0);
}

TEST(Synth, ForkSharesPrefixAndDiverges) {
  SynthConfig cfg;
  const auto base = synth_roundabout(cfg, SimOptions{kSpeedJitter, 40, 1});
  const auto fork = synth_roundabout(cfg, SimOptions{kSpeedJitter, 40, 2});
  bool diverged = false;
  for (std::size_t i = 0; i < base.tracks.size(); ++i) {
    for (std::size_t k = 0; k < std::min(base.tracks[i].points.size(), fork.tracks[i].points.size()); ++k) {
      const auto& a = base.tracks[i].points[k];
      const auto& b = fork.tracks[i].points[k];
      if (a.frame < 40) {
        EXPECT_EQ(a.x, b.x);
        EXPECT_EQ(a.y, b.y);
      } else if (a.x != b.x) {
        diverged = true;
      }
    }
  }
  EXPECT_TRUE(diverged);
}

TEST(SynthConfig, RejectsOutOfRangeFields) {
  SynthConfig cfg;
  cfg.n_agents = 1;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.n_agents = 26;
  EXPECT_THROW(synth_roundabout(cfg), ValidationError);
  cfg = {};
  cfg.gap_accept_s = -0.1;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.noise_std = -1.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Window, ExactlyOneWindowAtTheBoundary) {
  const std::vector<Track> fits{straight_track(1, 0, 19, 0, 0), straight_track(2, 0, 19, 5, 0)};
  EXPECT_EQ(window_scenes(fits, 5, 15, 1).size(), 1u);
  const std::vector<Track> short_by_one{straight_track(1, 0, 18, 0, 0), straight_track(2, 0, 18, 5, 0)};
  EXPECT_TRUE(window_scenes(short_by_one, 5, 15, 1).empty());
}

TEST(Window, LoneTrackGivesNoScenes) {
  const std::vector<Track> lone{straight_track(1, 0, 200, 0, 0)};
  EXPECT_TRUE(window_scenes(lone, 5, 15, 1).empty());
  EXPECT_TRUE(window_scenes({}, 5, 15, 1).empty());
}

TEST(Window, CountMatchesBruteForceScan) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::int64_t> first(0, 60), len(5, 80);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Track> tracks;
    for (int i = 0; i < 6; ++i) {
      const auto f = first(rng);
      tracks.push_back(straight_track(i + 1, f, f + len(rng), 3.0 * i, 0));
    }
    for (std::size_t stride : {1u, 3u, 10u}) {
      for (std::size_t t_f : {15u, 25u}) {
        EXPECT_EQ(window_scenes(tracks, 5, t_f, stride).size(), brute_force_window_count(tracks, t_f, stride));
      }
    }
  }
}

TEST(Window, ShapesAndAgentBounds) {
  SynthConfig cfg;
  cfg.n_agents = 25;
  const auto samples = window_scenes(synth_roundabout(cfg).tracks, 5, 25, 2, "ring");
  ASSERT_FALSE(samples.empty());
  for (const auto& s : samples) {
    const auto A = s.n_agents();
    EXPECT_GE(A, kMinAgents);
    EXPECT_LE(A, kMaxAgents);
    EXPECT_EQ(s.history.size(), A * 5 * kAgentFeatures);
    EXPECT_EQ(s.future_gt.size(), A * 25 * 2);
    EXPECT_EQ(s.valid.size(), A * 30);
    EXPECT_EQ(s.map_ref, "ring");
    EXPECT_LT(s.ego_index, A);
    for (std::size_t a = 0; a < A; ++a) EXPECT_TRUE(s.valid_at(a, 4));  // present at the current frame
  }
}

TEST(Window, HistoryIsCentredOnTheCurrentCentroid) {
  const std::vector<Track> tracks{straight_track(1, 0, 19, 10, 4), straight_track(2, 0, 19, 20, -2)};
  const auto s = window_scenes(tracks, 5, 15, 1).at(0);
  EXPECT_NEAR(s.current_x(0) + s.current_x(1), 0.0, 1e-12);
  EXPECT_NEAR(s.current_y(0) + s.current_y(1), 0.0, 1e-12);
  EXPECT_NEAR(s.origin_x, 15.0 + 4 * kFrameDt, 1e-12);
  EXPECT_NEAR(s.origin_y, 1.0, 1e-12);
  EXPECT_EQ(s.anchor_frame, 4);
  EXPECT_NEAR(s.future(0, 0, 0) - s.current_x(0), kFrameDt, 1e-12);
  EXPECT_EQ(s.hist(0, 0, 2), 1.0);  // cos(0)
  EXPECT_EQ(s.hist(0, 0, 4), 1.0);  // speed
  EXPECT_EQ(s.hist(0, 0, 5), 1.0);  // vehicle
}

TEST(Window, PartialAgentsAreMaskedAndNeverEgo) {
  // Agent 3 appears at the current frame and sits exactly on the centroid.
  const std::vector<Track> tracks{straight_track(1, 0, 19, -4, 0, 0, 0), straight_track(2, 0, 19, 4, 0, 0, 0),
                                  straight_track(3, 4, 10, 0, 0, 0, 0)};
  const auto s = window_scenes(tracks, 5, 15, 1).at(0);
  ASSERT_EQ(s.n_agents(), 3u);
  for (std::size_t t = 0; t < 4; ++t) EXPECT_FALSE(s.valid_at(2, t));
  EXPECT_TRUE(s.valid_at(2, 4));
  EXPECT_TRUE(s.future_valid(2, 5));
  EXPECT_FALSE(s.future_valid(2, 6));
  // Agents 1 and 2 tie on distance; the lower id wins.
  EXPECT_EQ(s.ego_index, 0u);
}

TEST(Window, CapsAtTwentyFiveNearestAgents) {
  std::vector<Track> tracks;
  for (int i = 0; i < 30; ++i) tracks.push_back(straight_track(i + 1, 0, 19, (i % 2 ? 1.0 : -1.0) * i, 0, 0, 0));
  const auto samples = window_scenes(tracks, 5, 15, 1);
  ASSERT_EQ(samples.size(), 1u);
  ASSERT_EQ(samples[0].n_agents(), kMaxAgents);
  // The five farthest from the centroid (ids 26..30) are dropped.
  for (auto id : samples[0].agent_ids) EXPECT_LE(id, 25);
}

TEST(Window, EquivariantUnderFrameShiftAndTranslation) {
  SynthConfig cfg;
  cfg.n_agents = 10;
  const auto tracks = synth_roundabout(cfg).tracks;
  auto moved = tracks;
  for (auto& t : moved)
    for (auto& p : t.points) {
      p.frame += 37;
      p.x += 100.0;
      p.y -= 50.0;
    }
  const auto a = window_scenes(tracks, 5, 15, 3), b = window_scenes(moved, 5, 15, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(b[i].anchor_frame, a[i].anchor_frame + 37);
    EXPECT_EQ(b[i].agent_ids, a[i].agent_ids);
    EXPECT_EQ(b[i].valid, a[i].valid);
    EXPECT_EQ(b[i].ego_index, a[i].ego_index);
    EXPECT_NEAR(b[i].origin_x, a[i].origin_x + 100.0, 1e-9);
    for (std::size_t k = 0; k < a[i].history.size(); ++k) ASSERT_NEAR(b[i].history[k], a[i].history[k], 1e-9);
    for (std::size_t k = 0; k < a[i].future_gt.size(); ++k) ASSERT_NEAR(b[i].future_gt[k], a[i].future_gt[k], 1e-9);
  }
}

TEST(Window, RejectsUnsupportedLengths) {
  const std::vector<Track> tracks{straight_track(1, 0, 40, 0, 0), straight_track(2, 0, 40, 5, 0)};
  EXPECT_THROW(window_scenes(tracks, 4, 15, 1), ValidationError);
  EXPECT_THROW(window_scenes(tracks, 5, 20, 1), ValidationError);
  EXPECT_THROW(window_scenes(tracks, 5, 15, 0), ValidationError);
}

}  // namespace
