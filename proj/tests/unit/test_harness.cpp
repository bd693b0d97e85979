#include "oscan/harness/baseline.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

using namespace oscan;

namespace {

Scene square(double side) {
  Scene s;
  s.ground.vertices = {{0, 0}, {side, 0}, {side, side}, {0, side}};
  return s;
}

Scene data_scene(const std::string& name) {
  return load_scene(std::string(OSCAN_DATA_DIR) + "/scenes/" + name);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST(CoverageIou, EmptyCloudIsZero) {
  EXPECT_EQ(coverage_iou(LabeledPointCloud{}, square(10.0)), 0.0);
}

TEST(CoverageIou, ExactCoverIsOne) {
  const auto scene = square(10.0);
  LabeledPointCloud cloud;
  for (double x = 0.25; x < 10.0; x += 0.5)
    for (double y = 0.25; y < 10.0; y += 0.5) cloud.push_back({x, y, 0.0}, Label::Ground);
  EXPECT_DOUBLE_EQ(coverage_iou(cloud, scene), 1.0);
  // Obstacle returns never count as coverage.
  cloud.push_back({20.0, 20.0, 1.0}, Label::Obstacle);
  EXPECT_DOUBLE_EQ(coverage_iou(cloud, scene), 1.0);
}

TEST(CoverageIou, HalfCoveredSquare) {
  const auto scene = square(10.0);
  LabeledPointCloud cloud;
  for (double x = 0.1; x < 5.0; x += 0.2)
    for (double y = 0.1; y < 10.0; y += 0.2) cloud.push_back({x, y, 0.0}, Label::Ground);
  const double iou = coverage_iou(cloud, scene);
  const double one_cell = 0.5 / 10.0;
  EXPECT_NEAR(iou, 0.5, one_cell);
}

TEST(CoverageIou, MarginAroundObstaclesIsNotRequired) {
  auto scene = square(20.0);
  scene.obstacles.push_back({wall_polygon({10, 0}, {10, 20}, 0.2), 3.0});
  const CoverageMask mask(scene);
  LabeledPointCloud cloud;
  // Ground everywhere at least the removal clearance from the wall.
  for (double x = 0.05; x < 20.0; x += 0.1)
    for (double y = 0.05; y < 20.0; y += 0.1)
      if (std::abs(x - 10.0) - 0.1 >= 1.0) cloud.push_back({x, y, 0.0}, Label::Ground);
  EXPECT_DOUBLE_EQ(mask.iou(cloud), 1.0);
  // A point inside a truly non-walkable cell is a false positive.
  cloud.push_back({10.0, 5.0, 0.0}, Label::Ground);
  EXPECT_LT(mask.iou(cloud), 1.0);
}

TEST(Config, PrecedenceDefaultsSceneFileFlags) {
  auto scene = square(10.0);
  scene.params = {{"sigma", 9.0}, {"rn", 4.0}};
  const auto cfg = config_for(scene, {{"rn", 5.0}, {"lambda", 0.6}});
  EXPECT_EQ(cfg.planner.guidance.sigma, 9.0);
  EXPECT_EQ(cfg.planner.guidance.site_spacing, 5.0);
  EXPECT_EQ(cfg.planner.guidance.lambda, 0.6);
  EXPECT_EQ(cfg.planner.guidance.omega, EpisodeConfig{}.planner.guidance.omega);
  EXPECT_THROW(config_for(scene, {{"sigmaa", 1.0}}), InvalidArgument);
  EXPECT_THROW(config_for(scene, {{"lambda", 1.5}}), InvalidArgument);
  EXPECT_THROW(config_for(scene, {{"budget", "far"}}), InvalidArgument);
}

TEST(Compare, TableIsReproducible) {
  const auto scene = data_scene("corridor.json");
  EpisodeConfig cfg;
  cfg.budget = 40.0;
  auto table = [&] {
    std::vector<CompareRow> rows;
    for (auto p : {Policy::Full, Policy::RandomWalk})
      for (std::uint64_t s = 1; s <= 2; ++s) {
        auto c = cfg;
        c.policy = p;
        rows.push_back(compare_row(p, s, run_episode(scene, c, s)));
      }
    std::ostringstream os;
    write_compare_csv(os, rows);
    return os.str();
  };
  const auto a = table();
  EXPECT_EQ(a, table());
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 5);
}

TEST(Baseline, FullBeatsRandomWalkToEightyPercentOnCorridor) {
  const auto scene = data_scene("corridor.json");
  EpisodeConfig cfg;
  cfg.budget = 300.0;
  std::vector<double> full, random;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    full.push_back(run_baseline(scene, Policy::Full, s, cfg).travel_to(0.8));
    random.push_back(run_baseline(scene, Policy::RandomWalk, s, cfg).travel_to(0.8));
  }
  EXPECT_LT(median(full), median(random));
}

TEST(Baseline, GreedyOnlyTravelsFartherOnThreeBranches) {
  const auto scene = data_scene("three_branch.json");
  EpisodeConfig cfg;
  std::vector<double> full, greedy;
  for (std::uint64_t s = 1; s <= 3; ++s) {
    full.push_back(run_baseline(scene, Policy::Full, s, cfg).travel);
    greedy.push_back(run_baseline(scene, Policy::GreedyOnly, s, cfg).travel);
  }
  EXPECT_GT(median(greedy), median(full));
}

TEST(Baseline, RefinementDoesNotChangeTheFirstGoal) {
  const auto scene = data_scene("corridor.json");
  EpisodeConfig cfg;
  cfg.lidar.noise_sigma = 0.0;
  cfg.policy = Policy::Full;
  const auto full = run_episode(scene, cfg, 1);
  cfg.policy = Policy::NoRefine;
  const auto plain = run_episode(scene, cfg, 1);
  ASSERT_FALSE(full.trace.empty());
  ASSERT_FALSE(plain.trace.empty());
  EXPECT_EQ(full.trace.front().goal_id, plain.trace.front().goal_id);
  EXPECT_GT(full.metrics.final_iou, 0.9);
  EXPECT_GT(plain.metrics.final_iou, 0.9);
}

TEST(Metrics, CurveIsMonotoneInTravelAndBounded) {
  const auto scene = data_scene("corridor.json");
  const auto r = run_episode(scene, EpisodeConfig{}, 4);
  for (std::size_t k = 0; k < r.metrics.curve.size(); ++k) {
    EXPECT_GE(r.metrics.curve[k].iou, 0.0);
    EXPECT_LE(r.metrics.curve[k].iou, 1.0);
    if (k > 0) EXPECT_GE(r.metrics.curve[k].traveled, r.metrics.curve[k - 1].traveled);
  }
  // Coverage only drops on steps that removed ground near new obstacles.
  for (std::size_t k = 1; k < r.metrics.curve.size(); ++k)
    if (r.metrics.curve[k].iou < r.metrics.curve[k - 1].iou) EXPECT_TRUE(r.metrics.curve[k].removal);
}
