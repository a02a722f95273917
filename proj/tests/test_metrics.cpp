#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "pairpred/errors.hpp"
#include "pairpred/metrics.hpp"

namespace {

using namespace pairpred;
using namespace pairpred::metrics;

ModeTrajectories from_truth(const GroundTruth& gt, std::size_t modes) {
  ModeTrajectories p{modes, gt.n_agents, gt.t, {}};
  for (std::size_t m = 0; m < modes; ++m) p.xy.insert(p.xy.end(), gt.xy.begin(), gt.xy.end());
  return p;
}

void set_point(ModeTrajectories& p, std::size_t m, std::size_t a, std::size_t s, double x, double y) {
  p.xy[((m * p.n_agents + a) * p.t + s) * 2] = x;
  p.xy[((m * p.n_agents + a) * p.t + s) * 2 + 1] = y;
}

// Zero ground truth with the final point of each mode/agent shifted by `fde`.
std::pair<ModeTrajectories, GroundTruth> endpoint_case(const std::vector<std::vector<double>>& fde, std::size_t t) {
  const std::size_t modes = fde.size(), agents = fde[0].size();
  GroundTruth gt{agents, t, std::vector<double>(agents * t * 2, 0.0), {}};
  ModeTrajectories p{modes, agents, t, std::vector<double>(modes * agents * t * 2, 0.0)};
  for (std::size_t m = 0; m < modes; ++m)
    for (std::size_t a = 0; a < agents; ++a) set_point(p, m, a, t - 1, fde[m][a], 0.0);
  return {p, gt};
}

scenedata::SceneSample straight_sample(const std::vector<std::array<double, 5>>& agents, std::size_t t_f) {
  // Each agent: x, y, heading, speed, unused.
  scenedata::SceneSample s;
  s.t_f = t_f;
  for (std::size_t a = 0; a < agents.size(); ++a) {
    s.agent_ids.push_back(static_cast<std::int64_t>(a + 1));
    const auto& [x, y, heading, speed, _] = agents[a];
    for (std::size_t t = 0; t < s.t_h; ++t) {
      const double back = static_cast<double>(s.t_h - 1 - t) * scenedata::kFrameDt * speed;
      const double f[7] = {x - back * std::cos(heading), y - back * std::sin(heading), std::cos(heading),
                           std::sin(heading), speed, 1.0, 0.0};
      s.history.insert(s.history.end(), f, f + 7);
    }
    for (std::size_t t = 0; t < t_f; ++t) {
      s.future_gt.push_back(0.0);
      s.future_gt.push_back(0.0);
    }
    for (std::size_t t = 0; t < s.t_h + t_f; ++t) s.valid.push_back(1);
  }
  return s;
}

TEST(MinSade, ExactModeGivesZero) {
  std::mt19937_64 rng(1);
  const auto gt = oracle::random_truth(rng, 3, 10, 20.0, false);
  auto pred = oracle::random_prediction(rng, 4, 3, 10, 20.0);
  std::copy(gt.xy.begin(), gt.xy.end(), pred.xy.begin() + 2 * 3 * 10 * 2);  // mode 2
  EXPECT_EQ(min_sade(pred, gt), 0.0);
  EXPECT_EQ(min_sfde(pred, gt), 0.0);
}

TEST(MinSade, UniformThreeMeterOffset) {
  GroundTruth gt{1, 6, {}, {}};
  for (int s = 0; s < 6; ++s) {
    gt.xy.push_back(0.5 * s);
    gt.xy.push_back(-1.0 * s);
  }
  auto pred = from_truth(gt, 1);
  for (std::size_t i = 0; i < pred.xy.size(); i += 2) {
    pred.xy[i] += 1.8;
    pred.xy[i + 1] += 2.4;
  }
  EXPECT_NEAR(min_sade(pred, gt), 3.0, 1e-12);
  EXPECT_NEAR(min_sfde(pred, gt), 3.0, 1e-12);
}

TEST(MinSfde, WorkedTwoModeExample) {
  const auto [pred, gt] = endpoint_case({{1.0, 2.5}, {1.5, 1.8}}, 5);
  const auto per_mode = scene_fde_per_mode(pred, gt);
  EXPECT_DOUBLE_EQ(per_mode[0], 1.75);
  EXPECT_DOUBLE_EQ(per_mode[1], 1.65);
  EXPECT_DOUBLE_EQ(min_sfde(pred, gt), 1.65);
  EXPECT_EQ(best_sfde_mode(pred, gt), 1u);
  // Mode 1 is chosen and its worst agent sits at 1.8 m.
  EXPECT_FALSE(is_miss(pred, gt));
}

TEST(Smr, ThresholdIsStrict) {
  const auto [hit, gt] = endpoint_case({{2.0, 0.5}}, 3);
  EXPECT_FALSE(is_miss(hit, gt));
  const auto [miss, gt2] = endpoint_case({{2.01, 0.5}}, 3);
  EXPECT_TRUE(is_miss(miss, gt2));
  const std::vector<ModeTrajectories> preds{hit, miss};
  const std::vector<GroundTruth> gts{gt, gt2};
  EXPECT_DOUBLE_EQ(smr(preds, gts), 0.5);
}

TEST(Smr, UsesBestSfdeModeNotPerAgentBest) {
  // Mode 0 has one agent at 2.5 m but the lower SFDE; mode 1 has every
  // agent under 2 m but a higher SFDE. Mode 0 decides, so it is a miss.
  const auto [pred, gt] = endpoint_case({{2.5, 0.0, 0.0}, {1.9, 1.9, 1.9}}, 4);
  EXPECT_EQ(best_sfde_mode(pred, gt), 0u);
  EXPECT_TRUE(is_miss(pred, gt));
}

TEST(Smr, TiesGoToLowestModeIndex) {
  // Equal SFDE; mode 0 misses, mode 1 does not.
  const auto [pred, gt] = endpoint_case({{3.0, 0.0}, {1.5, 1.5}}, 2);
  EXPECT_EQ(best_sfde_mode(pred, gt), 0u);
  EXPECT_TRUE(is_miss(pred, gt));
  const auto [pred2, gt2] = endpoint_case({{1.5, 1.5}, {3.0, 0.0}}, 2);
  EXPECT_EQ(best_sfde_mode(pred2, gt2), 0u);
  EXPECT_FALSE(is_miss(pred2, gt2));
}

TEST(Smr, AllExactPredictionsGiveZero) {
  std::mt19937_64 rng(3);
  std::vector<ModeTrajectories> preds;
  std::vector<GroundTruth> gts;
  for (int s = 0; s < 5; ++s) {
    gts.push_back(oracle::random_truth(rng, 4, 15, 30.0, false));
    preds.push_back(from_truth(gts.back(), 6));
  }
  EXPECT_EQ(smr(preds, gts), 0.0);
  EXPECT_THROW(smr(std::span<const ModeTrajectories>{}, std::span<const GroundTruth>{}), ValidationError);
}

TEST(Metrics, MatchExhaustiveOracleOnRandomInstances) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> modes(1, 6), agents(1, 8), steps(1, 25);
  for (int n = 0; n < 300; ++n) {
    const std::size_t M = modes(rng), A = agents(rng), T = steps(rng);
    const auto gt = oracle::random_truth(rng, A, T, 5.0, n % 2 == 1);
    const auto pred = oracle::random_prediction(rng, M, A, T, 5.0);
    ASSERT_NEAR(min_sade(pred, gt), oracle::min_sade(pred, gt), 1e-12);
    ASSERT_NEAR(min_sfde(pred, gt), oracle::min_sfde(pred, gt), 1e-12);
    ASSERT_EQ(is_miss(pred, gt), oracle::is_miss(pred, gt));
  }
}

TEST(Metrics, MaskedStepsAreSkippedAndEndpointIsLastValid) {
  GroundTruth gt{1, 4, {0, 0, 1, 0, 2, 0, 3, 0}, {1, 1, 1, 0}};
  auto pred = from_truth(gt, 1);
  set_point(pred, 0, 0, 1, 1.0, 1.0);   // error 1 at step 1
  set_point(pred, 0, 0, 2, 2.0, 3.0);   // error 3 at step 2, the last valid step
  set_point(pred, 0, 0, 3, 50.0, 0.0);  // invalid step, ignored
  EXPECT_DOUBLE_EQ(min_sade(pred, gt), (0.0 + 1.0 + 3.0) / 3.0);
  EXPECT_DOUBLE_EQ(min_sfde(pred, gt), 3.0);
  EXPECT_TRUE(is_miss(pred, gt));
}

TEST(Metrics, AgentsWithoutValidStepsAreExcluded) {
  GroundTruth gt{2, 2, {0, 0, 0, 0, 0, 0, 0, 0}, {1, 1, 0, 0}};
  auto pred = from_truth(gt, 1);
  set_point(pred, 0, 1, 0, 100.0, 0.0);
  EXPECT_DOUBLE_EQ(min_sade(pred, gt), 0.0);
  GroundTruth none{1, 2, {0, 0, 0, 0}, {0, 0}};
  EXPECT_THROW(min_sade(from_truth(none, 1), none), ValidationError);
}

TEST(Metrics, MonotoneWhenModesAreAppended) {
  std::mt19937_64 rng(9);
  for (int n = 0; n < 50; ++n) {
    const auto gt = oracle::random_truth(rng, 3, 12, 5.0, false);
    auto pred = oracle::random_prediction(rng, 1, 3, 12, 5.0);
    double last_ade = min_sade(pred, gt), last_fde = min_sfde(pred, gt);
    for (int extra = 0; extra < 5; ++extra) {
      const auto more = oracle::random_prediction(rng, 1, 3, 12, 5.0);
      pred.xy.insert(pred.xy.end(), more.xy.begin(), more.xy.end());
      ++pred.n_modes;
      const double ade = min_sade(pred, gt), fde = min_sfde(pred, gt);
      EXPECT_LE(ade, last_ade);
      EXPECT_LE(fde, last_fde);
      last_ade = ade;
      last_fde = fde;
    }
  }
}

TEST(Metrics, InvariantUnderJointTranslation) {
  std::mt19937_64 rng(10);
  for (int n = 0; n < 50; ++n) {
    auto gt = oracle::random_truth(rng, 4, 10, 5.0, false);
    auto pred = oracle::random_prediction(rng, 3, 4, 10, 5.0);
    const double ade = min_sade(pred, gt), fde = min_sfde(pred, gt);
    const bool miss = is_miss(pred, gt);
    for (std::size_t i = 0; i < gt.xy.size(); i += 2) {
      gt.xy[i] += 13.25;
      gt.xy[i + 1] -= 7.5;
    }
    for (std::size_t i = 0; i < pred.xy.size(); i += 2) {
      pred.xy[i] += 13.25;
      pred.xy[i + 1] -= 7.5;
    }
    EXPECT_NEAR(min_sade(pred, gt), ade, 1e-12);
    EXPECT_NEAR(min_sfde(pred, gt), fde, 1e-12);
    EXPECT_EQ(is_miss(pred, gt), miss);
  }
}

TEST(Metrics, SingleModeSingleAgentEqualsPlainAdeFde) {
  std::mt19937_64 rng(11);
  const auto gt = oracle::random_truth(rng, 1, 7, 5.0, false);
  const auto pred = oracle::random_prediction(rng, 1, 1, 7, 5.0);
  double ade = 0.0;
  for (std::size_t s = 0; s < 7; ++s) {
    const double dx = pred.at(0, 0, s, 0) - gt.at(0, s, 0), dy = pred.at(0, 0, s, 1) - gt.at(0, s, 1);
    ade += std::sqrt(dx * dx + dy * dy);
  }
  const double dx = pred.at(0, 0, 6, 0) - gt.at(0, 6, 0), dy = pred.at(0, 0, 6, 1) - gt.at(0, 6, 1);
  EXPECT_DOUBLE_EQ(min_sade(pred, gt), ade / 7.0);
  EXPECT_EQ(min_sfde(pred, gt), std::sqrt(dx * dx + dy * dy));
}

TEST(Metrics, ShapeContractViolations) {
  GroundTruth empty{1, 0, {}, {}};
  ModeTrajectories none{1, 1, 0, {}};
  EXPECT_THROW(min_sade(none, empty), DimensionError);
  std::mt19937_64 rng(1);
  const auto gt = oracle::random_truth(rng, 2, 5, 1.0, false);
  const auto pred = oracle::random_prediction(rng, 2, 3, 5, 1.0);
  EXPECT_THROW(min_sfde(pred, gt), DimensionError);
}

TEST(ConstantVelocity, StationaryAgentStaysPut) {
  const auto s = straight_sample({{4.0, -2.0, 0.7, 0.0, 0.0}}, 15);
  const auto cv = constant_velocity_baseline(s, 15);
  ASSERT_EQ(cv.n_modes, 1u);
  for (std::size_t t = 0; t < 15; ++t) {
    EXPECT_DOUBLE_EQ(cv.at(0, 0, t, 0), 4.0);
    EXPECT_DOUBLE_EQ(cv.at(0, 0, t, 1), -2.0);
  }
}

TEST(ConstantVelocity, TwoMetersPerSecondAtFiveHertzSpacesPointsByFortyCentimeters) {
  const auto s = straight_sample({{0.0, 0.0, 0.0, 2.0, 0.0}}, 15);
  const auto cv = constant_velocity_baseline(s, 15);
  double prev = 0.0;
  for (std::size_t t = 0; t < 15; ++t) {
    EXPECT_NEAR(cv.at(0, 0, t, 0) - prev, 0.4, 1e-12);
    EXPECT_NEAR(cv.at(0, 0, t, 1), 0.0, 1e-12);
    prev = cv.at(0, 0, t, 0);
  }
}

TEST(ConstantVelocity, MatchesClosedFormOnRandomAgents) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> pos(-30, 30), heading(-3.1, 3.1), speed(0, 12);
  std::vector<std::array<double, 5>> agents;
  for (int a = 0; a < 6; ++a) agents.push_back({pos(rng), pos(rng), heading(rng), speed(rng), 0.0});
  const auto s = straight_sample(agents, 25);
  const auto cv = constant_velocity_baseline(s, 25);
  for (std::size_t a = 0; a < agents.size(); ++a) {
    const auto& [x, y, h, v, _] = agents[a];
    for (std::size_t t = 0; t < 25; ++t) {
      const double dt = 0.2 * static_cast<double>(t + 1);
      EXPECT_NEAR(cv.at(0, a, t, 0), x + v * std::cos(h) * dt, 1e-9);
      EXPECT_NEAR(cv.at(0, a, t, 1), y + v * std::sin(h) * dt, 1e-9);
    }
  }
}

TEST(GroundTruth, TruncatesAndCarriesMask) {
  auto s = straight_sample({{0, 0, 0, 1, 0}, {1, 1, 0, 1, 0}}, 15);
  for (std::size_t t = 0; t < 15; ++t) s.future_gt[(1 * 15 + t) * 2] = static_cast<double>(t);
  s.valid[1 * 20 + 5 + 3] = 0;
  const auto gt = ground_truth(s, 5);
  EXPECT_EQ(gt.t, 5u);
  EXPECT_EQ(gt.at(1, 4, 0), 4.0);
  EXPECT_FALSE(gt.is_valid(1, 3));
  EXPECT_TRUE(gt.is_valid(0, 3));
  EXPECT_THROW(ground_truth(s, 16), DimensionError);
}

TEST(Report, AveragesScenesAndWritesCsv) {
  const auto [p1, g1] = endpoint_case({{1.0, 3.0}}, 2);
  const auto [p2, g2] = endpoint_case({{0.0, 1.0}}, 2);
  const std::vector<ModeTrajectories> preds{p1, p2};
  const std::vector<GroundTruth> gts{g1, g2};
  const auto r = evaluate_scenes(3.0, preds, gts);
  EXPECT_EQ(r.n_scenes, 2u);
  EXPECT_DOUBLE_EQ(r.min_sfde, (2.0 + 0.5) / 2.0);
  EXPECT_DOUBLE_EQ(r.min_sade, (1.0 + 0.25) / 2.0);
  EXPECT_DOUBLE_EQ(r.smr, 0.5);

  const auto path = std::filesystem::temp_directory_path() / "pairpred_metrics_test.csv";
  const std::vector<MetricsReport> reports{r};
  write_metrics_csv(path, reports);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "horizon_s,min_sade,min_sfde,smr,n_scenes");
  EXPECT_EQ(row, "3,0.625,1.25,0.5,2");
  std::filesystem::remove(path);
}

}  // namespace
