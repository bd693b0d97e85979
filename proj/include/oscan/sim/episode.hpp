#pragma once

#include "oscan/harness/metrics.hpp"
#include "oscan/planner/planner.hpp"
#include "oscan/quality/fractal.hpp"
#include "oscan/refine/refine.hpp"
#include "oscan/sim/lidar.hpp"
#include "oscan/sim/motion.hpp"

#include <chrono>
#include <map>
#include <random>
#include <sstream>
#include <string_view>

namespace oscan {

enum class Policy { Full, NoRefine, GreedyOnly, RandomWalk };

inline const char* to_string(Policy p) {
  switch (p) {
    case Policy::Full: return "full";
    case Policy::NoRefine: return "norefine";
    case Policy::GreedyOnly: return "greedy";
    case Policy::RandomWalk: return "random";
  }
  return "?";
}

inline Policy parse_policy(std::string_view s) {
  if (s == "full") return Policy::Full;
  if (s == "norefine" || s == "no_refine") return Policy::NoRefine;
  if (s == "greedy" || s == "greedy_only") return Policy::GreedyOnly;
  if (s == "random" || s == "random_walk") return Policy::RandomWalk;
  throw InvalidArgument("unknown policy: " + std::string(s));
}

struct EpisodeConfig {
  Policy policy = Policy::Full;
  double budget = 1000.0;
  PlannerParams planner;
  MapParams map;
  LidarModel lidar;
  RefineParams refine;
  QualityParams quality;
  MotionParams motion;
  double safety_clearance = 1.0;  // against the true scene geometry
  double coverage_cell = 0.5;
  double quality_probe_cell = 1.0;
  double quality_probe_reach = 4.0;
  std::size_t quality_probe_cap = 128;
  int halt_limit = 2;  // halts before a goal is given up
  int max_steps = 5000;
  std::optional<Vec2> start;  // overrides the scene start
};

struct EpisodeHooks {
  std::function<void(const StepView&)> on_plan;
  std::function<void(const ExplorationMap&, int scan)> after_scan;
};

struct EpisodeResult {
  std::string status;
  std::vector<TraceRow> trace;
  MetricsReport metrics;
  std::vector<int> visited;  // site ids in the order they were visited
  PathPolyline executed;
  std::uint64_t trace_hash = 0;
  int scans = 0;
  double seconds = 0.0;
  ExplorationMap map;
};

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  write_trace_header(os);
  for (const auto& r : rows) write_trace_row(os, r);
}

/// Under-scanned probes near `path`: centroids of occupied voxels within
/// `reach` of the path whose local box-counting dimension is below the
/// threshold. Ordered by the queue, worst first.
inline QualityQueue quality_queue_along(const ExplorationMap& map, const PathPolyline& path,
                                        const EpisodeConfig& cfg) {
  if (path.size() < 2) return QualityQueue{};
  const auto& cloud = map.cloud();
  const double v = cfg.quality_probe_cell;
  std::map<std::uint64_t, std::pair<Point3, int>> voxels;
  std::vector<char> taken(cloud.size(), 0);
  const auto samples = path.resample(2.0);
  for (const auto& s : samples.waypoints()) {
    for (auto i : map.within(s, cfg.quality_probe_reach)) {
      if (taken[i]) continue;
      taken[i] = 1;
      const Point3& p = cloud.points[i];
      const auto key = detail::pack_cell(
          {detail::cell_floor(p.x(), v), detail::cell_floor(p.y(), v), detail::cell_floor(p.z(), v)});
      auto& slot = voxels.try_emplace(key, Point3::Zero(), 0).first->second;
      slot.first += p;
      slot.second += 1;
    }
  }
  std::vector<Point3> probes;
  for (const auto& [key, acc] : voxels) probes.push_back(acc.first / acc.second);
  if (probes.size() > cfg.quality_probe_cap) {
    std::vector<Point3> kept;
    const double stride = static_cast<double>(probes.size()) / cfg.quality_probe_cap;
    for (std::size_t k = 0; k < cfg.quality_probe_cap; ++k)
      kept.push_back(probes[static_cast<std::size_t>(k * stride)]);
    probes.swap(kept);
  }
  const auto& q = cfg.quality;
  const double h = q.half_width;
  std::vector<QualityQueue::Entry> entries;
  std::vector<Point3> nb;
  for (const auto& p : probes) {
    nb.clear();
    for (auto i : map.within(p, h * std::sqrt(2.0))) {
      const Point3& x = cloud.points[i];
      if ((x - p).cwiseAbs().maxCoeff() <= h) nb.push_back(x);
    }
    if (nb.size() < q.min_points) continue;
    const double d = fractal_dimension(nb, q.ladder);
    if (is_under_scanned(d, q)) entries.push_back({p, d});
  }
  return QualityQueue(std::move(entries));
}

namespace detail {

/// Random reachable roadmap node within the planning radius.
inline PlanStep random_walk_step(const ExplorationMap& map, const Point3& robot, double radius,
                                 double snap, std::mt19937_64& rng) {
  PlanStep step;
  const auto& roadmap = map.roadmap();
  const auto graph = roadmap.build_graph();
  const auto start = roadmap.nearest_node(graph, robot, snap);
  if (!start) {
    step.reason = "robot is off the ground roadmap";
    return step;
  }
  const auto tree = dijkstra(graph.graph, *start);
  std::vector<std::size_t> options;
  for (std::size_t v = 0; v < graph.graph.nodes.size(); ++v) {
    const double d = planar_distance(graph.graph.nodes[v], robot);
    if (tree.reachable(v) && d >= 1.0 && d <= radius) options.push_back(v);
  }
  if (options.empty()) {
    step.reason = "no reachable free ground";
    return step;
  }
  const auto goal = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
  step.path.append(robot);
  for (auto v : tree.path_to(goal)) step.path.append(graph.graph.nodes[v]);
  step.status = StepStatus::Goal;
  return step;
}

}  // namespace detail

/// Runs one exploration episode: scan, integrate, plan, optionally refine,
/// move with timer scans; until the planner terminates or the budget is spent.
inline EpisodeResult run_episode(const Scene& scene, const EpisodeConfig& cfg, std::uint64_t seed,
                                 const EpisodeHooks& hooks = {}) {
  const auto wall_start = std::chrono::steady_clock::now();
  EpisodeResult out{.status = {}, .trace = {}, .metrics = {}, .visited = {}, .executed = {},
                    .trace_hash = 0, .scans = 0, .seconds = 0.0, .map = ExplorationMap(cfg.map)};
  auto& map = out.map;

  const Vec2 start2 = cfg.start.value_or(scene.start.position);
  if (!scene.walkable(start2) || scene.obstacle_distance(start2) < cfg.safety_clearance)
    throw InvalidArgument("run_episode: start pose is not clear of obstacles");
  RobotState robot;
  robot.position = Point3(start2.x(), start2.y(), scene.ground_z);
  robot.heading = scene.start.heading;
  robot.budget = cfg.budget;

  PlannerParams pp = cfg.planner;
  if (cfg.policy == Policy::GreedyOnly) pp.use_tsp = false;
  Planner planner(pp);
  planner.set_observer([&](const StepView& view) {
    for (int id : view.maintenance.visited) out.visited.push_back(id);
    if (hooks.on_plan) hooks.on_plan(view);
  });
  const LidarSimulator lidar(scene, cfg.lidar);
  const CoverageMask mask(scene, cfg.coverage_cell, cfg.map.removal_clearance);
  const bool uses_sites = cfg.policy != Policy::RandomWalk;
  const bool refines = cfg.policy == Policy::Full || cfg.policy == Policy::GreedyOnly;
  std::mt19937_64 walk_rng(seed ^ 0x9e3779b97f4a7c15ull);

  bool removal = false;
  bool fresh_footprints = false;
  auto take_scan = [&](const Point3& at) {
    const auto batch = lidar.scan(at, seed, robot.scan_index);
    const auto st = map.integrate(batch, robot.scan_index);
    if (uses_sites) planner.on_scan(map, at, robot.scan_index);
    if (hooks.after_scan) hooks.after_scan(map, robot.scan_index);
    ++robot.scan_index;
    removal = removal || st.removed_ground > 0;
    fresh_footprints = fresh_footprints || st.new_footprints > 0;
  };
  auto truth_safe = [&](const Point3& p) {
    return scene.obstacle_distance(p) >= cfg.safety_clearance;
  };

  take_scan(robot.position);
  out.executed.append(robot.position);
  out.metrics.curve.push_back({0.0, mask.iou(map.cloud()), removal});
  removal = false;

  std::vector<Point3> traversed;
  std::map<int, int> halts;
  for (int step = 0;; ++step) {
    if (step >= cfg.max_steps) {
      out.status = "step_limit";
      break;
    }
    const auto t0 = std::chrono::steady_clock::now();
    PlanStep plan = uses_sites ? planner.plan(map, robot.position, robot.scan_index - 1,
                                              robot.budget, traversed)
                               : detail::random_walk_step(map, robot.position, pp.guidance.sigma,
                                                          pp.snap_radius, walk_rng);
    traversed.clear();
    TraceRow row;
    row.step = step;
    row.scan = robot.scan_index - 1;
    row.robot = robot.position;
    row.goal_id = plan.goal_id;
    row.goal_class = uses_sites ? (plan.status == StepStatus::Goal ? to_string(plan.goal_class) : "-")
                                : "walk";
    row.active_count = plan.active_count;
    if (plan.status == StepStatus::Terminate) {
      row.remaining_budget = robot.budget;
      row.traveled = robot.traveled;
      row.coverage = out.metrics.curve.back().iou;
      out.trace.push_back(row);
      out.status = "terminated: " + plan.reason;
      break;
    }

    PathPolyline path = plan.path;
    ClearanceFn clearance = footprint_clearance(map.footprints());
    if (refines) {
      const auto queue = quality_queue_along(map, path, cfg);
      path = refine_traverse(path, queue, clearance, cfg.refine).path;
    }
    row.path_length = path.length();

    const double traveled_before = robot.traveled;
    fresh_footprints = false;
    auto on_timer = [&](const RobotState& rs) {
      take_scan(rs.position);
      if (!fresh_footprints) return true;
      fresh_footprints = false;
      clearance = footprint_clearance(map.footprints());
      const double done = rs.traveled - traveled_before;
      const auto dense = path.resample(0.25);
      const auto& arc = dense.cumulative();
      for (std::size_t k = 0; k < dense.size(); ++k)
        if (arc[k] > done + 0.5 && clearance(dense.waypoints()[k]) < cfg.refine.clearance)
          return false;
      return true;
    };
    const auto motion = step_robot(robot, path, cfg.motion, truth_safe, on_timer);
    for (const auto& p : motion.poses) out.executed.append(p);
    traversed = motion.poses;
    const bool stop_scanned = motion.timer_scans > 0 && motion.events.size() >= 2 &&
                              motion.events[motion.events.size() - 2].pose == robot.position;
    if (!stop_scanned) take_scan(robot.position);

    if (motion.outcome == MotionOutcome::Halted && plan.goal_id >= 0 &&
        ++halts[plan.goal_id] >= cfg.halt_limit)
      planner.drop_site(plan.goal_id);

    const double iou = mask.iou(map.cloud());
    out.metrics.curve.push_back({robot.traveled, iou, removal});
    removal = false;
    out.metrics.step_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    row.remaining_budget = robot.budget;
    row.traveled = robot.traveled;
    row.coverage = iou;
    out.trace.push_back(row);
    if (motion.outcome == MotionOutcome::BudgetExhausted || robot.budget <= 1e-9) {
      out.status = "budget_exhausted";
      break;
    }
  }

  out.scans = robot.scan_index;
  out.metrics.final_iou = out.metrics.curve.back().iou;
  out.metrics.travel = robot.traveled;
  out.metrics.curvature = accumulated_curvature(out.executed);
  std::ostringstream csv;
  write_trace_csv(csv, out.trace);
  std::uint64_t h = fnv1a(csv.str());
  for (int id : out.visited) h = fnv1a(std::to_string(id) + ";", h);
  h = fnv1a(out.status, h);
  out.trace_hash = h;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return out;
}

}  // namespace oscan
