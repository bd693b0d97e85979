#include "oscan/planner/planner.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace oscan;

namespace {

CostMatrix random_matrix(std::mt19937_64& rng, std::size_t sites) {
  std::uniform_real_distribution<double> u(0.5, 20.0);
  CostMatrix c(sites + 1, std::vector<double>(sites + 1, 0.0));
  for (std::size_t i = 0; i <= sites; ++i)
    for (std::size_t j = 0; j <= sites; ++j)
      if (i != j) c[i][j] = u(rng);
  return c;
}

double brute_force_best(const CostMatrix& c) {
  std::vector<std::size_t> perm(c.size() - 1);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do best = std::min(best, open_path_cost(c, perm));
  while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

bool is_permutation_of(const std::vector<std::size_t>& order, std::size_t n) {
  std::vector<std::size_t> s = order;
  std::sort(s.begin(), s.end());
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] != i) return false;
  return s.size() == n;
}

void add_ground(ScanBatch& b, double x0, double x1, double y0, double y1, double step = 0.25) {
  for (double x = x0; x <= x1 + 1e-9; x += step)
    for (double y = y0; y <= y1 + 1e-9; y += step) {
      b.points.emplace_back(x, y, 0.0);
      b.labels.push_back(Label::Ground);
    }
}

void add_wall_y(ScanBatch& b, double y, double x0, double x1) {
  for (double x = x0; x <= x1 + 1e-9; x += 0.1)
    for (double z = 0.5; z <= 2.0 + 1e-9; z += 0.5) {
      b.points.emplace_back(x, y, z);
      b.labels.push_back(Label::Obstacle);
    }
}

MapParams no_sweep() {
  MapParams p;
  p.sweep_range = 0.0;
  return p;
}

}  // namespace

TEST(EdgeObjective, Examples) {
  EXPECT_DOUBLE_EQ(edge_objective(10.0, 0.5), 20.0);
  EXPECT_DOUBLE_EQ(edge_objective(10.0, 0.0), 10.0);
  EXPECT_NEAR(edge_objective(10.0, 1.0), 10.0 / 0.001, 1e-6);
  EXPECT_TRUE(std::isfinite(edge_objective(10.0, 1.0)));
  EXPECT_THROW(edge_objective(-1.0, 0.2), InvalidArgument);
}

TEST(EdgeObjective, MatrixUsesDestinationTau) {
  const CostMatrix d{{0, 4, 6}, {4, 0, 2}, {6, 2, 0}};
  const auto o = objective_matrix(d, {0.5, 0.75});
  EXPECT_DOUBLE_EQ(o[0][1], 8.0);
  EXPECT_DOUBLE_EQ(o[0][2], 24.0);
  EXPECT_DOUBLE_EQ(o[2][1], 4.0);
  EXPECT_DOUBLE_EQ(o[1][2], 8.0);
  EXPECT_DOUBLE_EQ(o[1][0], 0.0);
}

TEST(TspOrder, TrivialSizes) {
  EXPECT_TRUE(tsp_order(CostMatrix{{0.0}}).order.empty());
  const auto one = tsp_order(CostMatrix{{0, 3}, {3, 0}});
  ASSERT_EQ(one.order.size(), 1u);
  EXPECT_EQ(one.order[0], 0u);
  EXPECT_DOUBLE_EQ(one.cost, 3.0);
}

TEST(TspOrder, ThreeSitesMatchEnumeration) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = random_matrix(rng, 3);
    const auto t = tsp_order(c);
    EXPECT_TRUE(is_permutation_of(t.order, 3));
    EXPECT_DOUBLE_EQ(t.cost, brute_force_best(c));
  }
}

TEST(TspOrder, ExactUpToEightSitesAsymmetric) {
  std::mt19937_64 rng(22);
  int mismatches = 0;
  for (std::size_t n = 2; n <= 8; ++n)
    for (int trial = 0; trial < 100; ++trial) {
      const auto c = random_matrix(rng, n);
      const auto t = tsp_order(c);
      ASSERT_TRUE(is_permutation_of(t.order, n));
      EXPECT_DOUBLE_EQ(t.cost, open_path_cost(c, t.order));
      if (std::abs(t.cost - brute_force_best(c)) > 1e-9) ++mismatches;
    }
  EXPECT_EQ(mismatches, 0);
}

TEST(TspOrder, HeuristicRangeIsValidAndNotWorseThanNearestNeighbor) {
  std::mt19937_64 rng(23);
  for (std::size_t n : {13u, 15u, 30u}) {
    const auto c = random_matrix(rng, n);
    const auto t = tsp_order(c);
    ASSERT_TRUE(is_permutation_of(t.order, n));
    std::vector<std::size_t> nn;
    std::vector<bool> used(n, false);
    std::size_t at = 0;
    for (std::size_t s = 0; s < n; ++s) {
      std::size_t best = n;
      for (std::size_t k = 0; k < n; ++k)
        if (!used[k] && (best == n || c[at][k + 1] < c[at][best + 1])) best = k;
      used[best] = true;
      nn.push_back(best);
      at = best + 1;
    }
    EXPECT_LE(t.cost, open_path_cost(c, nn) + 1e-9);
  }
  EXPECT_THROW(tsp_order(random_matrix(rng, 31)), PlannerError);
}

TEST(GreedyNext, Examples) {
  const std::vector<double> one_d{7.0}, one_t{0.4};
  const std::vector<int> one_id{3};
  EXPECT_EQ(greedy_next(one_d, one_t, one_id), 0u);

  const std::vector<double> d{9.0, 5.0}, t{0.5, 0.5};
  const std::vector<int> ids{0, 1};
  EXPECT_EQ(greedy_next(d, t, ids), 1u);

  const std::vector<double> tie_d{10.0, 20.0}, tie_t{0.5, 0.0};
  const std::vector<int> tie_ids{4, 2};
  EXPECT_EQ(greedy_next(tie_d, tie_t, tie_ids), 1u);
  const std::vector<int> swapped{1, 2};
  EXPECT_EQ(greedy_next(tie_d, tie_t, swapped), 0u);

  const std::vector<double> unreachable{std::numeric_limits<double>::infinity()};
  EXPECT_FALSE(greedy_next(unreachable, one_t, one_id).has_value());
}

TEST(ClassifySite, Examples) {
  EXPECT_EQ(classify_site(0.9, 0.0), SiteClass::OpenArea);
  EXPECT_EQ(classify_site(0.5, 1.0), SiteClass::OpenArea);
  EXPECT_EQ(classify_site(0.5, 1.0 - 5e-7), SiteClass::OpenArea);
  EXPECT_EQ(classify_site(0.5, 0.4), SiteClass::BranchEntry);
  EXPECT_EQ(classify_site(0.8, 0.0), SiteClass::BranchEntry);
}

TEST(ActiveSet, MaintenanceRules) {
  ActiveSiteSet set;
  VisitSite a;
  a.position = {0, 0, 0};
  a.tau = a.current_tau = 0.6;
  VisitSite b = a;
  b.position = {20, 0, 0};
  VisitSite c = a;
  c.position = {0, 20, 0};
  ASSERT_TRUE(set.try_insert(a, 6.0, 1));
  ASSERT_TRUE(set.try_insert(b, 6.0, 1));
  ASSERT_TRUE(set.try_insert(c, 6.0, 1));

  // Site b's τ drops to 0.2; the robot passed within 1.4 m of site a.
  auto tau_at = [](const Point3& p) -> std::optional<double> {
    if (p.x() > 10) return 0.2;
    return 0.5;
  };
  const std::vector<Point3> passed{{5, 5, 0}, {1.0, 1.0, 0.3}};
  VisitSite near_c = a;
  near_c.position = {2, 20, 0};
  VisitSite far = a;
  far.position = {-20, 0, 0};
  const std::vector<VisitSite> cands{near_c, far};
  const auto r = maintain_active_set(set, tau_at, passed, cands, 2, 6.0);
  EXPECT_EQ(set.at(0).state, SiteState::Visited);
  EXPECT_EQ(set.at(1).state, SiteState::Removed);
  EXPECT_EQ(set.at(2).state, SiteState::Active);
  EXPECT_DOUBLE_EQ(set.at(2).current_tau, 0.5);
  ASSERT_EQ(r.inserted.size(), 1u);
  EXPECT_EQ(set.at(r.inserted[0]).position, far.position);
  EXPECT_EQ(set.at(r.inserted[0]).created_scan, 2);
  EXPECT_EQ(set.active_count(), 2u);
  EXPECT_THROW(set.retire(0, SiteState::Removed), PlannerError);
}

TEST(ExplorationMap, IntegrationCounts) {
  ScanBatch b;
  add_ground(b, 0, 4, 0, 4);
  const std::size_t n = b.points.size();
  ExplorationMap map(no_sweep());
  EXPECT_EQ(map.integrate(b, 1).added, n);
  EXPECT_EQ(map.cloud().size(), n);
  const auto again = map.integrate(b, 2);
  EXPECT_EQ(again.added, 0u);
  EXPECT_EQ(again.merged, n);
  EXPECT_EQ(map.cloud().size(), n);
  ScanBatch other;
  add_ground(other, 10, 14, 0, 4);
  map.integrate(other, 3);
  EXPECT_EQ(map.cloud().size(), n + other.points.size());
  EXPECT_TRUE(map.cloud().consistent());
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(map.cloud().first_seen[i], 1);
}

TEST(ExplorationMap, CellsRememberTheirFirstGroundReturn) {
  ScanBatch b;
  add_ground(b, 0, 2, 0, 2, 0.5);
  ExplorationMap map(no_sweep());
  map.integrate(b, 1);
  ScanBatch shifted;
  add_ground(shifted, 0.2, 2.7, 0.2, 2.7, 0.5);
  map.integrate(shifted, 4);
  EXPECT_EQ(map.cloud().first_seen.back(), 4);
  EXPECT_EQ(map.cell_first_seen({1.2, 1.2, 0.0}), 1);
  EXPECT_EQ(map.cell_first_seen({2.7, 2.7, 0.0}), 4);
  EXPECT_EQ(map.cell_first_seen({9.0, 9.0, 0.0}), std::numeric_limits<int>::max());
}

TEST(Planner, FreshSamplesInheritTheExplorabilityOfTheirCell) {
  PlannerParams pp;
  Planner planner(pp);
  ExplorationMap map(no_sweep());
  ScanBatch b;
  add_ground(b, 0, 20, 0, 20, 0.5);
  map.integrate(b, 0);
  planner.on_scan(map, {10.0, 10.0, 0.0}, 0);
  const auto near = map.nearest_ground({10.0, 10.0, 0.0}, 0.1);
  ASSERT_TRUE(near);
  const double phi_near = map.cloud().explorability[*near];

  // A new sample 0.2 m away, scanned from a far pose, keeps the low value.
  ScanBatch fresh;
  fresh.points.emplace_back(10.2, 10.2, 0.0);
  fresh.labels.push_back(Label::Ground);
  map.integrate(fresh, 1);
  const std::size_t added = map.cloud().size() - 1;
  ASSERT_EQ(map.cloud().first_seen[added], 1);
  const Point3 far(18.0, 18.0, 0.0);
  planner.on_scan(map, far, 1);
  // Without obstacles the medial term is 1.
  const double own = pp.guidance.omega * explorability_distance(map.cloud().points[added], far,
                                                                pp.guidance.sigma) +
                     (1.0 - pp.guidance.omega);
  EXPECT_LT(map.cloud().explorability[added], own);
  EXPECT_LE(map.cloud().explorability[added], phi_near + 0.1);
}

TEST(ExplorationMap, NewObstacleRemovesNearbyGroundAndKeepsIds) {
  ScanBatch b;
  add_ground(b, -5, 5, -5, 5);
  ExplorationMap map(no_sweep());
  map.integrate(b, 1);
  const auto before = map.cloud().size();
  const auto far_id = map.point_ids().back();
  const Point3 far_pt = map.cloud().points.back();

  ScanBatch wall;
  add_wall_y(wall, 0.0, -1.0, 1.0);
  const auto st = map.integrate(wall, 2);
  EXPECT_GT(st.removed_ground, 0u);
  EXPECT_EQ(map.cloud().size(), before - st.removed_ground + st.added);
  for (std::size_t i = 0; i < map.cloud().size(); ++i) {
    if (!map.cloud().is_ground(i)) continue;
    for (const auto& f : map.footprints()) EXPECT_GT(planar_distance(map.cloud().points[i], f), 0.95);
  }
  // Ground re-observed inside the band is rejected.
  ScanBatch again;
  again.points.push_back({0.0, 0.5, 0.0});
  again.labels.push_back(Label::Ground);
  EXPECT_EQ(map.integrate(again, 3).rejected_ground, 1u);
  // Ids follow their points through the removal.
  const auto& ids = map.point_ids();
  const auto it = std::find(ids.begin(), ids.end(), far_id);
  ASSERT_NE(it, ids.end());
  EXPECT_EQ(map.cloud().points[static_cast<std::size_t>(it - ids.begin())], far_pt);
  // Grid queries agree with a linear scan after the reindexing.
  const Point3 c(1.0, 2.0, 0.0);
  std::vector<std::size_t> brute;
  for (std::size_t i = 0; i < map.cloud().size(); ++i)
    if (planar_distance(map.cloud().points[i], c) <= 3.0) brute.push_back(i);
  EXPECT_EQ(map.within(c, 3.0), brute);
}

TEST(GroundRoadmap, BlockedCellsAndConnectivity) {
  GroundRoadmap rm(0.5, 1.1);
  for (double x = 0.25; x < 10; x += 0.5)
    for (double y = 0.25; y < 3; y += 0.5) rm.observe({x, y, 0.2});
  // A wall across the strip at x = 5 cuts it in two.
  for (double y = 0; y <= 3; y += 0.05) rm.block_around({5.0, y, 0.0});
  const auto g = rm.build_graph();
  const auto a = rm.nearest_node(g, {1.0, 1.5, 0.0}, 1.0);
  const auto b = rm.nearest_node(g, {9.0, 1.5, 0.0}, 1.0);
  ASSERT_TRUE(a && b);
  EXPECT_FALSE(dijkstra(g.graph, *a).reachable(*b));
  EXPECT_NEAR(g.graph.nodes[*a].z(), 0.2, 1e-12);
  for (const auto& p : g.graph.nodes) EXPECT_GT(std::abs(p.x() - 5.0), 1.1);
  EXPECT_FALSE(rm.nearest_node(g, {5.0, 1.5, 0.0}, 0.5).has_value());
}

TEST(PlanStep, NothingToExploreTerminates) {
  ScanBatch b;
  add_ground(b, -1, 1, -1, 1);
  ExplorationMap map(no_sweep());
  map.integrate(b, 1);
  Planner planner;
  const Point3 robot(0, 0, 0);
  planner.on_scan(map, robot, 1);
  const auto step = planner.plan(map, robot, 1, 1000.0, {});
  EXPECT_EQ(step.status, StepStatus::Terminate);
  EXPECT_EQ(planner.sites().active_count(), 0u);
}

TEST(PlanStep, BudgetShorterThanPathTerminates) {
  // L-shaped strip: the best site sits around the corner, ~15 m away by ground.
  auto build = [](ExplorationMap& map) {
    ScanBatch b;
    add_ground(b, 0, 9, -1, 1);
    add_ground(b, 8, 10, -1, 7);
    map.integrate(b, 1);
  };
  const Point3 robot(0, 0, 0);
  for (double budget : {10.0, 1000.0}) {
    ExplorationMap map(no_sweep());
    build(map);
    Planner planner;
    planner.on_scan(map, robot, 1);
    const auto step = planner.plan(map, robot, 1, budget, {});
    if (budget < 100) {
      EXPECT_EQ(step.status, StepStatus::Terminate);
      EXPECT_NE(step.reason.find("budget"), std::string::npos);
    } else {
      ASSERT_EQ(step.status, StepStatus::Goal);
      EXPECT_GT(step.path.length(), 10.0);
      EXPECT_LT(step.path.length(), 20.0);
    }
  }
}

TEST(PlanStep, OpenAreaBeatsBranchEntry) {
  ExplorationMap map(no_sweep());
  ScanBatch b;
  // Open area to the north-west, a walled corridor heading east.
  add_ground(b, -14, 14, -3, 14);
  add_wall_y(b, -4.0, -14, 14);
  add_wall_y(b, 4.0, 2, 14);
  map.integrate(b, 1);
  Planner planner;
  const Point3 robot(0, 0, 0);
  planner.on_scan(map, robot, 1);
  const auto step = planner.plan(map, robot, 1, 1000.0, {});
  ASSERT_EQ(step.status, StepStatus::Goal);
  EXPECT_FALSE(planner.sites().active_ids(SiteClass::OpenArea).empty());
  ASSERT_FALSE(planner.sites().active_ids(SiteClass::BranchEntry).empty());
  EXPECT_EQ(step.goal_class, SiteClass::OpenArea);
  // Some BE site has a cheaper objective, so the choice is the branch rule.
  const auto tree_cost = [&](int id) {
    const auto& s = planner.sites().at(id);
    return edge_objective(planar_distance(s.position, robot), s.current_tau);
  };
  double best_be = std::numeric_limits<double>::infinity();
  for (int id : planner.sites().active_ids(SiteClass::BranchEntry)) best_be = std::min(best_be, tree_cost(id));
  EXPECT_LT(best_be, tree_cost(step.goal_id));
}

TEST(PlanStep, ActiveSitesRespectSpacingAndAreDeterministic) {
  auto run = [] {
    ExplorationMap map(no_sweep());
    ScanBatch b;
    add_ground(b, -14, 14, -14, 14, 0.3);
    map.integrate(b, 1);
    Planner planner;
    std::vector<std::pair<int, Point3>> out;
    planner.set_observer([&](const StepView& v) {
      const auto active = v.sites.active_ids();
      for (std::size_t i = 0; i < active.size(); ++i)
        for (std::size_t j = i + 1; j < active.size(); ++j)
          EXPECT_GE((v.sites.at(active[i]).position - v.sites.at(active[j]).position).norm(), 6.0);
    });
    planner.on_scan(map, {0, 0, 0}, 1);
    const auto step = planner.plan(map, {0, 0, 0}, 1, 1000.0, {});
    out.emplace_back(step.goal_id, step.path.back());
    for (const auto& s : planner.sites().all()) out.emplace_back(s.id, s.position);
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Trace, CsvRow) {
  std::ostringstream os;
  write_trace_header(os);
  TraceRow r;
  r.step = 2;
  r.scan = 5;
  r.robot = {1, 2, 0};
  r.goal_id = 7;
  r.goal_class = "BE";
  r.path_length = 12.5;
  r.remaining_budget = 900;
  r.active_count = 3;
  write_trace_row(os, r);
  EXPECT_NE(os.str().find("2,5,1.0000,2.0000,0.0000,7,BE,12.5000,900.0000,3,"), std::string::npos);
}
