#pragma once

#include "oscan/core/graph.hpp"
#include "oscan/core/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <span>
#include <unordered_map>
#include <vector>

namespace oscan {

struct GuidanceParams {
  double sigma = 12.0;  // explorability scale and planning-area radius
  double omega = 0.5;   // distance vs medial weight
  double lambda = 0.7;  // explorability vs observability weight
  double site_spacing = 6.0;
  double site_floor = 0.3;
  std::size_t map_degree = 8;
};

/// φ_d = 1 − exp(−‖p − robot‖² / σ²).
inline double explorability_distance(const Point3& p, const Point3& robot, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("explorability_distance: sigma must be positive");
  const double d2 = (p - robot).squaredNorm();
  return 1.0 - std::exp(-d2 / (sigma * sigma));
}

/// φ_m = min(1, distance to the nearest obstacle / σ); 1 without obstacles.
inline double explorability_medial(const Point3& p, const SpatialIndex* obstacles, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("explorability_medial: sigma must be positive");
  if (obstacles == nullptr || obstacles->size() == 0) return 1.0;
  const auto n = obstacles->nearest(p);
  return std::min(1.0, n->distance / sigma);
}

/// Fuses φ = ω·φ_d + (1−ω)·φ_m for the ground points in `subset` and keeps
/// the running minimum in `cloud.explorability`. `obstacle_distance(p)` gives
/// the distance to the nearest obstacle (infinite when there is none).
/// Returns the candidates aligned with the subset.
template <typename DistanceFn>
std::vector<double> update_explorability_by(LabeledPointCloud& cloud,
                                            std::span<const std::size_t> subset,
                                            const Point3& robot, DistanceFn&& obstacle_distance,
                                            double omega, double sigma) {
  if (omega < 0.0 || omega > 1.0) throw InvalidArgument("update_explorability: omega outside [0,1]");
  if (!(sigma > 0.0)) throw InvalidArgument("update_explorability: sigma must be positive");
  std::vector<double> candidate(subset.size(), kUnset);
  for (std::size_t k = 0; k < subset.size(); ++k) {
    const auto i = subset[k];
    if (!cloud.is_ground(i)) continue;
    const Point3& p = cloud.points[i];
    const double medial = std::min(1.0, obstacle_distance(p) / sigma);
    const double phi = omega * explorability_distance(p, robot, sigma) + (1.0 - omega) * medial;
    candidate[k] = phi;
    double& stored = cloud.explorability[i];
    if (!is_set(stored) || phi < stored) stored = phi;
  }
  return candidate;
}

inline std::vector<double> update_explorability(LabeledPointCloud& cloud,
                                                std::span<const std::size_t> subset,
                                                const Point3& robot, const SpatialIndex* obstacles,
                                                double omega, double sigma) {
  return update_explorability_by(
      cloud, subset, robot,
      [&](const Point3& p) { return explorability_medial(p, obstacles, sigma) * sigma; }, omega,
      sigma);
}

/// τ = λ·φ + (1−λ)·ρ̃ over the ground points of `subset`, written to
/// `cloud.guidance` and returned aligned with the subset. Unset ρ̃ counts as 0.
inline std::vector<double> guidance_field(LabeledPointCloud& cloud,
                                          std::span<const std::size_t> subset, double lambda) {
  if (lambda < 0.0 || lambda > 1.0) throw InvalidArgument("guidance_field: lambda outside [0,1]");
  std::vector<double> tau(subset.size(), kUnset);
  for (std::size_t k = 0; k < subset.size(); ++k) {
    const auto i = subset[k];
    if (!cloud.is_ground(i)) continue;
    const double phi = cloud.explorability[i];
    if (!is_set(phi)) throw InvalidArgument("guidance_field: explorability not computed");
    const double rho = is_set(cloud.observability[i]) ? cloud.observability[i] : 0.0;
    tau[k] = std::clamp(lambda * phi + (1.0 - lambda) * rho, 0.0, 1.0);
    cloud.guidance[i] = tau[k];
  }
  return tau;
}

enum class SiteClass : std::uint8_t { OpenArea, BranchEntry };
enum class SiteState : std::uint8_t { Active, Visited, Removed };

inline const char* to_string(SiteClass c) { return c == SiteClass::OpenArea ? "OA" : "BE"; }
inline const char* to_string(SiteState s) {
  switch (s) {
    case SiteState::Active: return "active";
    case SiteState::Visited: return "visited";
    default: return "removed";
  }
}

struct VisitSite {
  int id = -1;  // creation order within an episode
  Point3 position = Point3::Zero();
  double tau = 0.0;          // at creation
  double current_tau = 0.0;  // last re-evaluation
  SiteClass cls = SiteClass::BranchEntry;
  SiteState state = SiteState::Active;
  int created_scan = 0;
};

/// Local maxima of τ under non-maximum suppression.
///
/// Points are ranked by (τ descending, cloud index ascending). A point becomes
/// a site when no better-ranked point lies within `spacing` of it and its τ
/// reaches `floor`. Walking the ranking from the top, this is the greedy
/// "take the best, suppress its neighborhood" rule with the suppressed points
/// still acting as blockers, so every site is the argmax of its own
/// neighborhood and sites are pairwise more than `spacing` apart.
/// `tau` is aligned with `subset`; non-ground or unset entries are skipped.
inline std::vector<VisitSite> extract_sites(const LabeledPointCloud& cloud,
                                            std::span<const std::size_t> subset,
                                            std::span<const double> tau, double spacing,
                                            double floor = 0.3) {
  if (tau.size() != subset.size()) throw InvalidArgument("extract_sites: tau/subset size mismatch");
  if (!(spacing > 0.0)) throw InvalidArgument("extract_sites: spacing must be positive");
  std::vector<std::size_t> members;
  std::vector<Point3> pos;
  for (std::size_t k = 0; k < subset.size(); ++k)
    if (cloud.is_ground(subset[k]) && is_set(tau[k])) {
      members.push_back(k);
      pos.push_back(cloud.points[subset[k]]);
    }
  std::vector<VisitSite> sites;
  if (members.empty()) return sites;

  auto better = [&](std::size_t a, std::size_t b) {
    const double ta = tau[members[a]], tb = tau[members[b]];
    if (ta != tb) return ta > tb;
    return subset[members[a]] < subset[members[b]];
  };

  // Only the best point of each voxel can be a site, and a voxel whose best
  // point is not better than a candidate holds no better point at all.
  const double voxel = spacing / 8.0;
  std::unordered_map<std::uint64_t, std::size_t> slot;
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> best;
  for (std::size_t m = 0; m < pos.size(); ++m) {
    const detail::CellKey c{static_cast<std::int64_t>(std::floor(pos[m].x() / voxel)),
                            static_cast<std::int64_t>(std::floor(pos[m].y() / voxel)),
                            static_cast<std::int64_t>(std::floor(pos[m].z() / voxel))};
    auto [it, fresh] = slot.try_emplace(detail::pack_cell(c), groups.size());
    if (fresh) {
      groups.emplace_back();
      best.push_back(m);
    }
    groups[it->second].push_back(m);
    if (better(m, best[it->second])) best[it->second] = m;
  }
  std::vector<Point3> best_pos;
  for (auto m : best) best_pos.push_back(pos[m]);
  std::vector<std::size_t> order(best.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return better(best[a], best[b]); });

  const SpatialIndex index(best_pos, spacing / 2.0);
  const double reach = spacing + voxel * std::sqrt(3.0);
  const double s2 = spacing * spacing;
  for (auto g : order) {
    const std::size_t m = best[g];
    const double t = tau[members[m]];
    if (t < floor) break;
    const bool dominated = index.any_of_in_radius(pos[m], reach, [&](std::size_t h) {
      if (h == g || !better(best[h], m)) return false;
      if ((best_pos[h] - pos[m]).squaredNorm() <= s2) return true;
      for (auto j : groups[h])
        if (better(j, m) && (pos[j] - pos[m]).squaredNorm() <= s2) return true;
      return false;
    });
    if (dominated) continue;
    VisitSite s;
    s.position = pos[m];
    s.tau = s.current_tau = t;
    sites.push_back(s);
  }
  return sites;
}

/// Sites with a directed k-nearest-neighbor graph. Neighbors are chosen by
/// Euclidean distance; edge weights are travel distances.
struct TopoMap {
  struct Edge {
    std::size_t to;
    double weight;
  };
  std::vector<VisitSite> sites;
  std::vector<std::vector<Edge>> neighbors;

  std::size_t size() const { return sites.size(); }
};

/// `travel(i, j)` returns the ground distance between sites i and j, or a
/// non-finite value when they are disconnected (Euclidean distance is used).
inline TopoMap build_topo_map(std::vector<VisitSite> sites, std::size_t k,
                              const std::function<double(std::size_t, std::size_t)>& travel = {}) {
  TopoMap map;
  map.sites = std::move(sites);
  const std::size_t n = map.sites.size();
  map.neighbors.assign(n, {});
  if (n < 2 || k == 0) return map;
  std::vector<Point3> pos;
  for (const auto& s : map.sites) pos.push_back(s.position);
  const SpatialIndex index(pos, 4.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& nb : index.knn(pos[i], std::min(k + 1, n))) {
      if (nb.index == i || map.neighbors[i].size() == k) continue;
      double w = travel ? travel(i, nb.index) : nb.distance;
      if (!std::isfinite(w)) w = nb.distance;
      map.neighbors[i].push_back({nb.index, std::max(w, 1e-9)});
    }
  }
  return map;
}

/// One CSV row per site: x,y,z,tau,class.
inline void write_sites_csv(std::ostream& os, std::span<const VisitSite> sites) {
  os << "x,y,z,tau,class\n";
  char buf[128];
  for (const auto& s : sites) {
    std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,%.5f,%s\n", s.position.x(), s.position.y(),
                  s.position.z(), s.current_tau, to_string(s.cls));
    os << buf;
  }
}

}  // namespace oscan
