#pragma once

#include "oscan/core/distance_field.hpp"
#include "oscan/guidance/guidance.hpp"
#include "oscan/planner/tsp.hpp"
#include "oscan/planner/world_map.hpp"
#include "oscan/visibility/ghpr.hpp"

#include <functional>
#include <optional>
#include <ostream>
#include <string>

namespace oscan {

struct PlannerParams {
  GuidanceParams guidance;
  double visit_radius = 1.5;
  double open_area_medial = 0.8;  // φ_m above this makes a site OA
  std::size_t history = 2;
  double ghpr_alpha = kDefaultGhprAlpha;
  double visibility_voxel = 0.25;
  double smoothing_radius = 2.0;
  double smoothing_sigma = 1.0;
  double medial_cell = 0.1;
  double snap_radius = 1.5;  // sites and robot attach to a roadmap node this close
  double site_probe = 0.5;   // τ at a site is read from ground this close
  double explorability_cell = 0.5;  // planar cells sharing the running minimum of φ
  std::size_t tsp_window = 15;
  bool use_tsp = true;
};

/// OA when the site is spacious (φ_m above the threshold) or fully
/// observable (ρ̃ = 1 within 1e-6); BE otherwise.
inline SiteClass classify_site(double medial, double smoothed_rho, double medial_threshold = 0.8) {
  return medial > medial_threshold || smoothed_rho >= 1.0 - 1e-6 ? SiteClass::OpenArea
                                                                 : SiteClass::BranchEntry;
}

/// Every site ever created, indexed by id. Only active sites change state,
/// so a visited or removed site never returns to planning.
class ActiveSiteSet {
 public:
  const std::vector<VisitSite>& all() const { return sites_; }
  const VisitSite& at(int id) const { return sites_.at(static_cast<std::size_t>(id)); }
  VisitSite& at(int id) { return sites_.at(static_cast<std::size_t>(id)); }

  std::vector<int> active_ids() const {
    std::vector<int> out;
    for (const auto& s : sites_)
      if (s.state == SiteState::Active) out.push_back(s.id);
    return out;
  }
  std::vector<int> active_ids(SiteClass cls) const {
    std::vector<int> out;
    for (const auto& s : sites_)
      if (s.state == SiteState::Active && s.cls == cls) out.push_back(s.id);
    return out;
  }
  std::size_t active_count() const { return active_ids().size(); }

  /// Adds `site` unless an active site lies closer than `spacing`.
  std::optional<int> try_insert(VisitSite site, double spacing, int scan) {
    for (const auto& s : sites_)
      if (s.state == SiteState::Active && (s.position - site.position).norm() < spacing)
        return std::nullopt;
    site.id = static_cast<int>(sites_.size());
    site.state = SiteState::Active;
    site.created_scan = scan;
    sites_.push_back(site);
    return site.id;
  }

  void retire(int id, SiteState state) {
    if (state == SiteState::Active) throw InvalidArgument("retire: target state must be terminal");
    auto& s = at(id);
    if (s.state != SiteState::Active) throw PlannerError("retire: site is not active");
    s.state = state;
  }

 private:
  std::vector<VisitSite> sites_;
};

struct MaintenanceReport {
  std::vector<int> visited;
  std::vector<int> removed;
  std::vector<int> inserted;
};

/// One maintenance pass over the active set.
///
/// Active sites are re-evaluated through `tau_at`; a value below `floor`
/// removes the site, no value leaves it untouched. Candidates are inserted in
/// order when at least `spacing` from every active site. Finally every active
/// site within `visit_radius` (planar) of a traversed pose becomes Visited.
inline MaintenanceReport maintain_active_set(
    ActiveSiteSet& set, const std::function<std::optional<double>(const Point3&)>& tau_at,
    std::span<const Point3> traversed, std::span<const VisitSite> candidates, int scan,
    double spacing, double visit_radius = 1.5, double floor = 0.3) {
  MaintenanceReport r;
  for (int id : set.active_ids()) {
    if (const auto t = tau_at(set.at(id).position)) {
      set.at(id).current_tau = *t;
      if (*t < floor) {
        set.retire(id, SiteState::Removed);
        r.removed.push_back(id);
      }
    }
  }
  for (const auto& c : candidates)
    if (const auto id = set.try_insert(c, spacing, scan)) r.inserted.push_back(*id);
  for (int id : set.active_ids()) {
    const Point3& p = set.at(id).position;
    const bool reached = std::any_of(traversed.begin(), traversed.end(), [&](const Point3& q) {
      return planar_distance(p, q) <= visit_radius;
    });
    if (reached) {
      set.retire(id, SiteState::Visited);
      r.visited.push_back(id);
    }
  }
  return r;
}

/// Index (into `distances`) of the cheapest destination under the traverse
/// objective; ties go to the lower id. Non-finite distances are skipped.
inline std::optional<std::size_t> greedy_next(std::span<const double> distances,
                                              std::span<const double> tau,
                                              std::span<const int> ids) {
  std::optional<std::size_t> best;
  double best_cost = 0.0;
  for (std::size_t k = 0; k < distances.size(); ++k) {
    if (!std::isfinite(distances[k])) continue;
    const double c = edge_objective(distances[k], tau[k]);
    if (!best || c < best_cost || (c == best_cost && ids[k] < ids[*best])) {
      best = k;
      best_cost = c;
    }
  }
  return best;
}

enum class StepStatus { Goal, Terminate };

struct PlanStep {
  StepStatus status = StepStatus::Terminate;
  int goal_id = -1;
  SiteClass goal_class = SiteClass::BranchEntry;
  PathPolyline path;
  std::vector<int> order;  // planned visiting sequence, goal first
  std::size_t active_count = 0;
  std::string reason;
};

/// What the planner saw at one step, for tracing and property checks.
struct StepView {
  const LabeledPointCloud& cloud;
  std::span<const std::size_t> subset;  // ground points of the planning area
  std::span<const double> tau;          // aligned with subset
  const ActiveSiteSet& sites;
  const MaintenanceReport& maintenance;
  int scan;
};

/// Online planner over an ExplorationMap: keeps the viewpoint history, the
/// explorability field and the active site set, and picks the next goal.
class Planner {
 public:
  explicit Planner(PlannerParams params = {}) : params_(params), history_(params.history) {}

  const PlannerParams& params() const { return params_; }
  const ActiveSiteSet& sites() const { return sites_; }
  const ViewpointHistory& history() const { return history_; }

  void set_observer(std::function<void(const StepView&)> fn) { observer_ = std::move(fn); }

  /// Records a scan taken at `robot`: pushes the viewpoint and lowers the
  /// stored explorability of the planning-area ground.
  ///
  /// The running minimum is also kept per planar cell, and the minimum from
  /// earlier scans is folded into every point of the cell. Rescans add fresh
  /// samples of known ground; without this a fresh sample would start from
  /// the current pose alone and forget every earlier visit.
  void on_scan(ExplorationMap& map, const Point3& robot, int scan) {
    history_.push(robot, scan);
    const auto subset = map.within(robot, params_.guidance.sigma, Label::Ground);
    const auto field = medial_field(map, robot);
    auto& cloud = map.cloud();
    update_explorability_by(
        cloud, subset, robot, [&](const Point3& p) { return field.distance(p); },
        params_.guidance.omega, params_.guidance.sigma);
    const double c = params_.explorability_cell;
    auto key = [c](const Point3& p) {
      return detail::pack2(detail::cell_floor(p.x(), c), detail::cell_floor(p.y(), c));
    };
    for (auto i : subset) {
      double& phi = cloud.explorability[i];
      if (!is_set(phi)) continue;
      const auto it = cell_phi_.find(key(cloud.points[i]));
      if (it != cell_phi_.end()) phi = std::min(phi, it->second);
    }
    for (auto i : subset) {
      const double phi = cloud.explorability[i];
      if (!is_set(phi)) continue;
      auto [it, fresh] = cell_phi_.try_emplace(key(cloud.points[i]), phi);
      if (!fresh) it->second = std::min(it->second, phi);
    }
  }

  /// Marks a site removed from outside, e.g. after repeated execution failure.
  void drop_site(int id) {
    if (sites_.at(id).state == SiteState::Active) sites_.retire(id, SiteState::Removed);
  }

  /// One planning iteration at `robot` after a scan has been recorded.
  /// `traversed` holds the poses passed since the previous step.
  PlanStep plan(ExplorationMap& map, const Point3& robot, int scan, double budget,
                std::span<const Point3> traversed) {
    const auto& g = params_.guidance;
    auto& cloud = map.cloud();
    const auto subset = map.within(robot, g.sigma, Label::Ground);
    update_observability(map, robot);
    const auto tau = guidance_field(cloud, subset, g.lambda);
    auto candidates = extract_sites(cloud, subset, tau, g.site_spacing, g.site_floor);

    const auto field = medial_field(map, robot);
    auto tau_at = [&](const Point3& p) -> std::optional<double> {
      if (planar_distance(p, robot) > g.sigma) return std::nullopt;
      const auto i = map.nearest_ground(p, params_.site_probe);
      if (!i || !is_set(cloud.guidance[*i])) return std::nullopt;
      return cloud.guidance[*i];
    };
    std::vector<Point3> passed(traversed.begin(), traversed.end());
    passed.push_back(robot);
    const auto report = maintain_active_set(sites_, tau_at, passed, candidates, scan,
                                            g.site_spacing, params_.visit_radius, g.site_floor);
    for (int id : sites_.active_ids()) {
      auto& s = sites_.at(id);
      if (planar_distance(s.position, robot) > g.sigma) continue;
      const double medial = std::min(1.0, field.distance(s.position) / g.sigma);
      const auto i = map.nearest_ground(s.position, params_.site_probe);
      const double rho = i && is_set(cloud.observability[*i]) ? cloud.observability[*i] : 0.0;
      s.cls = classify_site(medial, rho, params_.open_area_medial);
    }
    if (observer_) observer_(StepView{cloud, subset, tau, sites_, report, scan});
    return choose_goal(map, robot, budget);
  }

 private:
  PlanarDistanceField medial_field(const ExplorationMap& map, const Point3& robot) const {
    const double sigma = params_.guidance.sigma;
    const auto seeds = map.footprints_within(robot, sigma);
    return PlanarDistanceField(robot, sigma + params_.medial_cell, params_.medial_cell, seeds);
  }

  /// ρ̃ over the planning area. Visibility runs on voxel representatives of
  /// all points in the area; ρ of a ground voxel is the share of its members
  /// that are newly observed and whose voxel is visible from a historical
  /// viewpoint. A point is newly observed when its planar cell first returned
  /// ground after the oldest historical scan, so rescanning known ground from
  /// a new pose does not look like unknown space. The smoothed voxel value is
  /// written to every member.
  void update_observability(ExplorationMap& map, const Point3& robot) {
    auto& cloud = map.cloud();
    const auto all = map.within(robot, params_.guidance.sigma);
    if (all.empty() || history_.empty()) return;
    const double v = params_.visibility_voxel;
    std::unordered_map<std::uint64_t, std::size_t> slot;
    std::vector<Point3> rep;
    std::vector<int> count;
    std::vector<std::size_t> voxel_of(all.size());
    for (std::size_t k = 0; k < all.size(); ++k) {
      const Point3& p = cloud.points[all[k]];
      const auto key = detail::pack_cell({detail::cell_floor(p.x(), v), detail::cell_floor(p.y(), v),
                                          detail::cell_floor(p.z(), v)});
      auto [it, fresh] = slot.try_emplace(key, rep.size());
      if (fresh) {
        rep.push_back(Point3::Zero());
        count.push_back(0);
      }
      voxel_of[k] = it->second;
      rep[it->second] += p;
      count[it->second] += 1;
    }
    for (std::size_t r = 0; r < rep.size(); ++r) rep[r] /= count[r];

    std::vector<bool> seen(rep.size(), false);
    for (const auto& entry : history_.entries()) {
      const auto vis = visible_set(rep, entry.position, params_.ghpr_alpha);
      for (std::size_t r = 0; r < rep.size(); ++r)
        if (vis[r]) seen[r] = true;
    }
    const int oldest = history_.oldest_index();
    std::vector<double> fresh_visible(rep.size(), 0.0), ground(rep.size(), 0.0);
    for (std::size_t k = 0; k < all.size(); ++k) {
      const auto i = all[k];
      if (!cloud.is_ground(i)) continue;
      const auto r = voxel_of[k];
      ground[r] += 1.0;
      if (seen[r] && map.cell_first_seen(cloud.points[i]) > oldest) fresh_visible[r] += 1.0;
    }
    std::vector<std::size_t> ground_voxels;
    std::vector<Point3> gpos;
    std::vector<double> grho;
    std::vector<std::size_t> dense(rep.size(), 0);
    for (std::size_t r = 0; r < rep.size(); ++r)
      if (ground[r] > 0) {
        dense[r] = ground_voxels.size();
        ground_voxels.push_back(r);
        gpos.push_back(rep[r]);
        grho.push_back(fresh_visible[r] / ground[r]);
      }
    const auto smooth =
        smooth_observability(gpos, grho, params_.smoothing_radius, params_.smoothing_sigma);
    for (std::size_t k = 0; k < all.size(); ++k)
      if (cloud.is_ground(all[k])) cloud.observability[all[k]] = smooth[dense[voxel_of[k]]];
  }

  PlanStep choose_goal(const ExplorationMap& map, const Point3& robot, double budget) {
    PlanStep step;
    const auto& roadmap = map.roadmap();
    const auto graph = roadmap.build_graph();
    const auto start = roadmap.nearest_node(graph, robot, params_.snap_radius);
    if (!start) {
      step.reason = "robot is off the ground roadmap";
      step.active_count = sites_.active_count();
      return step;
    }
    const auto tree = dijkstra(graph.graph, *start);

    // Attach sites to the roadmap; those that cannot be reached are dropped.
    std::vector<int> ids;
    std::vector<std::size_t> nodes;
    std::vector<double> dist, tau;
    for (int id : sites_.active_ids()) {
      const auto& s = sites_.at(id);
      const auto node = roadmap.nearest_node(graph, s.position, params_.snap_radius);
      if (!node || !tree.reachable(*node)) {
        sites_.retire(id, SiteState::Removed);
        continue;
      }
      ids.push_back(id);
      nodes.push_back(*node);
      dist.push_back(tree.distance[*node]);
      tau.push_back(s.current_tau);
    }
    step.active_count = ids.size();
    if (ids.empty()) {
      step.reason = "no reachable active sites";
      return step;
    }

    auto pick = [&](const std::vector<std::size_t>& members) {
      std::vector<double> d, t;
      std::vector<int> id;
      for (auto m : members) {
        d.push_back(dist[m]);
        t.push_back(tau[m]);
        id.push_back(ids[m]);
      }
      return members[*greedy_next(d, t, id)];
    };
    std::vector<std::size_t> oa, be;
    for (std::size_t m = 0; m < ids.size(); ++m)
      (sites_.at(ids[m]).cls == SiteClass::OpenArea ? oa : be).push_back(m);

    std::size_t goal;
    if (!oa.empty()) {
      goal = pick(oa);
      step.order = {ids[goal]};
    } else if (!params_.use_tsp) {
      goal = pick(be);
      step.order = {ids[goal]};
    } else {
      std::sort(be.begin(), be.end(), [&](auto a, auto b) {
        return dist[a] != dist[b] ? dist[a] < dist[b] : ids[a] < ids[b];
      });
      if (be.size() > params_.tsp_window) be.resize(params_.tsp_window);
      const std::size_t n = be.size();
      CostMatrix d(n + 1, std::vector<double>(n + 1, 0.0));
      std::vector<double> bt;
      for (std::size_t a = 0; a < n; ++a) {
        d[0][a + 1] = dist[be[a]];
        bt.push_back(tau[be[a]]);
        const auto from = dijkstra(graph.graph, nodes[be[a]]);
        for (std::size_t b = 0; b < n; ++b) {
          // Disconnected pairs cannot occur: both are reachable from the robot
          // and ground edges are symmetric.
          d[a + 1][b + 1] = from.distance[nodes[be[b]]];
        }
        d[a + 1][0] = dist[be[a]];
      }
      const auto tour = tsp_order(objective_matrix(d, bt));
      for (auto k : tour.order) step.order.push_back(ids[be[k]]);
      goal = be[tour.order.front()];
    }

    step.goal_id = ids[goal];
    step.goal_class = sites_.at(step.goal_id).cls;
    PathPolyline path;
    path.append(robot);
    for (auto v : tree.path_to(nodes[goal])) path.append(graph.graph.nodes[v]);
    step.path = std::move(path);
    if (step.path.length() > budget) {
      step.reason = "remaining budget cannot cover the next path";
      step.goal_id = -1;
      return step;
    }
    step.status = StepStatus::Goal;
    return step;
  }

  PlannerParams params_;
  ViewpointHistory history_;
  ActiveSiteSet sites_;
  std::unordered_map<std::uint64_t, double> cell_phi_;
  std::function<void(const StepView&)> observer_;
};

/// One CSV row per planning step.
struct TraceRow {
  int step = 0;
  int scan = 0;
  Point3 robot = Point3::Zero();
  int goal_id = -1;
  std::string goal_class;
  double path_length = 0.0;
  double remaining_budget = 0.0;
  std::size_t active_count = 0;
  double traveled = 0.0;
  double coverage = 0.0;
};

inline void write_trace_header(std::ostream& os) {
  os << "step,scan,x,y,z,goal_id,goal_class,path_length,remaining_budget,active_sites,traveled,"
        "coverage\n";
}

inline void write_trace_row(std::ostream& os, const TraceRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%d,%.4f,%.4f,%.4f,%d,%s,%.4f,%.4f,%zu,%.4f,%.5f\n", r.step,
                r.scan, r.robot.x(), r.robot.y(), r.robot.z(), r.goal_id, r.goal_class.c_str(),
                r.path_length, r.remaining_budget, r.active_count, r.traveled, r.coverage);
  os << buf;
}

}  // namespace oscan
