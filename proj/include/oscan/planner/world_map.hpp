#pragma once

#include "oscan/core/graph.hpp"
#include "oscan/core/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace oscan {

namespace detail {

inline std::uint64_t pack2(std::int64_t x, std::int64_t y) {
  return (static_cast<std::uint64_t>(x & 0xFFFFFFFF) << 32) | static_cast<std::uint64_t>(y & 0xFFFFFFFF);
}
inline std::int64_t unpack2_x(std::uint64_t k) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(k >> 32));
}
inline std::int64_t unpack2_y(std::uint64_t k) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(k & 0xFFFFFFFF));
}
inline std::int64_t cell_floor(double v, double cell) {
  return static_cast<std::int64_t>(std::floor(v / cell));
}

}  // namespace detail

/// Drivable-ground graph over a planar grid. A cell is a node once ground has
/// been observed in it (a ground return, or a LiDAR ray sweeping over it) and
/// no obstacle sample lies within the clearance of its center. Nodes connect
/// to their 8 grid neighbors.
class GroundRoadmap {
 public:
  struct Graph {
    WeightedGraph graph;
    std::vector<std::uint64_t> keys;  // ascending; node i has key keys[i]
    std::unordered_map<std::uint64_t, std::size_t> node_of;
  };

  explicit GroundRoadmap(double cell = 0.5, double clearance = 1.1)
      : cell_(cell), clearance_(clearance) {
    if (!(cell > 0.0) || clearance < 0.0) throw InvalidArgument("GroundRoadmap: bad parameters");
  }

  double cell() const { return cell_; }
  double clearance() const { return clearance_; }

  void observe(const Point3& p) {
    auto& c = cells_[key_of(p)];
    c.zsum += p.z();
    c.n += 1;
  }

  /// Blocks every cell whose center is within the clearance of `footprint`.
  void block_around(const Point3& footprint) {
    const auto x0 = detail::cell_floor(footprint.x() - clearance_, cell_);
    const auto x1 = detail::cell_floor(footprint.x() + clearance_, cell_);
    const auto y0 = detail::cell_floor(footprint.y() - clearance_, cell_);
    const auto y1 = detail::cell_floor(footprint.y() + clearance_, cell_);
    const double c2 = clearance_ * clearance_;
    for (auto x = x0; x <= x1; ++x)
      for (auto y = y0; y <= y1; ++y) {
        const double dx = (x + 0.5) * cell_ - footprint.x(), dy = (y + 0.5) * cell_ - footprint.y();
        if (dx * dx + dy * dy <= c2) blocked_.insert(detail::pack2(x, y));
      }
  }

  bool is_free(const Point3& p) const {
    const auto k = key_of(p);
    return cells_.count(k) != 0 && blocked_.count(k) == 0;
  }
  bool is_blocked(const Point3& p) const { return blocked_.count(key_of(p)) != 0; }
  std::size_t observed_cells() const { return cells_.size(); }

  Point3 center_of(std::uint64_t key) const {
    const auto it = cells_.find(key);
    const double z = it == cells_.end() || it->second.n == 0 ? 0.0 : it->second.zsum / it->second.n;
    return {(detail::unpack2_x(key) + 0.5) * cell_, (detail::unpack2_y(key) + 0.5) * cell_, z};
  }

  Graph build_graph() const {
    Graph g;
    for (const auto& [k, c] : cells_)
      if (blocked_.count(k) == 0) g.keys.push_back(k);
    std::sort(g.keys.begin(), g.keys.end());
    g.node_of.reserve(g.keys.size());
    for (std::size_t i = 0; i < g.keys.size(); ++i) {
      g.node_of.emplace(g.keys[i], i);
      g.graph.add_node(center_of(g.keys[i]));
    }
    for (std::size_t i = 0; i < g.keys.size(); ++i) {
      const auto x = detail::unpack2_x(g.keys[i]), y = detail::unpack2_y(g.keys[i]);
      // Half of the 8-neighborhood; the other half is added from the far side.
      constexpr int dx[4] = {1, 1, 0, -1}, dy[4] = {0, 1, 1, 1};
      for (int d = 0; d < 4; ++d) {
        const auto it = g.node_of.find(detail::pack2(x + dx[d], y + dy[d]));
        if (it != g.node_of.end()) g.graph.add_euclidean_edge(i, it->second);
      }
    }
    return g;
  }

  /// Closest node (planar distance, ties by key) within max_dist of q.
  std::optional<std::size_t> nearest_node(const Graph& g, const Point3& q, double max_dist) const {
    const auto x0 = detail::cell_floor(q.x() - max_dist, cell_);
    const auto x1 = detail::cell_floor(q.x() + max_dist, cell_);
    const auto y0 = detail::cell_floor(q.y() - max_dist, cell_);
    const auto y1 = detail::cell_floor(q.y() + max_dist, cell_);
    std::optional<std::size_t> best;
    double best_d = max_dist;
    for (auto x = x0; x <= x1; ++x)
      for (auto y = y0; y <= y1; ++y) {
        const auto it = g.node_of.find(detail::pack2(x, y));
        if (it == g.node_of.end()) continue;
        const double d = planar_distance(g.graph.nodes[it->second], q);
        if (d < best_d || (d == best_d && best && it->second < *best)) {
          best_d = d;
          best = it->second;
        }
      }
    return best;
  }

 private:
  struct Cell {
    double zsum = 0.0;
    int n = 0;
  };
  std::uint64_t key_of(const Point3& p) const {
    return detail::pack2(detail::cell_floor(p.x(), cell_), detail::cell_floor(p.y(), cell_));
  }

  double cell_, clearance_;
  std::unordered_map<std::uint64_t, Cell> cells_;
  std::unordered_set<std::uint64_t> blocked_;
};

struct MapParams {
  double merge_radius = 0.05;
  double removal_clearance = 1.0;  // ground this close to an obstacle is dropped
  double band_cell = 0.1;          // raster resolution of that clearance band
  double footprint_cell = 0.05;    // dedup resolution of obstacle footprints
  double roadmap_cell = 0.5;
  double roadmap_clearance = 1.1;
  double sweep_range = 20.0;  // ground rays this long mark the cells they pass over
  double grid_cell = 0.5;
  double observed_cell = 0.5;  // planar cells that remember their first ground return
};

/// One LiDAR sweep: labeled returns and the sensor position they came from.
struct ScanBatch {
  Point3 origin = Point3::Zero();
  std::vector<Point3> points;
  std::vector<Label> labels;
};

struct IntegrationStats {
  std::size_t added = 0;
  std::size_t merged = 0;
  std::size_t removed_ground = 0;   // existing ground dropped near new obstacles
  std::size_t rejected_ground = 0;  // incoming ground inside the clearance band
  std::size_t new_footprints = 0;
};

/// The accumulated scan cloud with the lookup structures the planner needs:
/// a 3D hash grid over the points, deduplicated obstacle footprints, the
/// clearance band around them, and the ground roadmap.
class ExplorationMap {
 public:
  explicit ExplorationMap(MapParams params = {})
      : params_(params), roadmap_(params.roadmap_cell, params.roadmap_clearance) {}

  const MapParams& params() const { return params_; }
  const LabeledPointCloud& cloud() const { return cloud_; }
  LabeledPointCloud& cloud() { return cloud_; }
  const GroundRoadmap& roadmap() const { return roadmap_; }
  const std::vector<Point3>& footprints() const { return footprints_; }
  /// Serial number of each cloud point; unchanged when other points are removed.
  const std::vector<std::uint64_t>& point_ids() const { return ids_; }
  std::uint64_t ids_issued() const { return next_id_; }

  /// Appends a batch with first-seen index `scan_index`.
  ///
  /// Obstacle returns go first. A return within the merge radius of an
  /// existing point of the same label is merged (the earlier point is kept).
  /// Each new obstacle footprint bans ground within the removal clearance:
  /// existing ground there is deleted and incoming ground is rejected.
  IntegrationStats integrate(const ScanBatch& batch, int scan_index) {
    if (batch.points.size() != batch.labels.size())
      throw InvalidArgument("integrate: points/labels size mismatch");
    IntegrationStats st;
    std::vector<std::uint64_t> newly_banned;
    for (std::size_t k = 0; k < batch.points.size(); ++k) {
      if (batch.labels[k] != Label::Obstacle) continue;
      const Point3& p = batch.points[k];
      if (has_neighbor(p, Label::Obstacle)) {
        ++st.merged;
        continue;
      }
      append(p, Label::Obstacle, scan_index);
      ++st.added;
      const auto fk = detail::pack2(detail::cell_floor(p.x(), params_.footprint_cell),
                                    detail::cell_floor(p.y(), params_.footprint_cell));
      if (footprint_cells_.insert(fk).second) {
        add_footprint(flatten(p), newly_banned);
        ++st.new_footprints;
      }
    }
    if (!newly_banned.empty()) st.removed_ground = remove_banned_ground(newly_banned);

    double best_range = 0.0;
    std::unordered_map<std::int64_t, Point3> farthest;  // per azimuth bin
    for (std::size_t k = 0; k < batch.points.size(); ++k) {
      if (batch.labels[k] != Label::Ground) continue;
      const Point3& p = batch.points[k];
      const double range = planar_distance(p, batch.origin);
      if (range <= params_.sweep_range) {
        const double az = std::atan2(p.y() - batch.origin.y(), p.x() - batch.origin.x());
        const auto bin = static_cast<std::int64_t>(std::floor(az / kSweepBin));
        auto [it, fresh] = farthest.try_emplace(bin, p);
        if (!fresh && range > planar_distance(it->second, batch.origin)) it->second = p;
        best_range = std::max(best_range, range);
      }
      if (in_band(p)) {
        ++st.rejected_ground;
        continue;
      }
      roadmap_.observe(p);
      if (has_neighbor(p, Label::Ground)) {
        ++st.merged;
        continue;
      }
      append(p, Label::Ground, scan_index);
      ++st.added;
    }
    std::vector<std::int64_t> bins;
    for (const auto& [b, p] : farthest) bins.push_back(b);
    std::sort(bins.begin(), bins.end());
    for (auto b : bins) sweep(batch.origin, farthest[b]);
    return st;
  }

  /// Indices of points within planar `radius` of `center`, ascending.
  std::vector<std::size_t> within(const Point3& center, double radius,
                                  std::optional<Label> label = std::nullopt) const {
    std::vector<std::size_t> out;
    if (cloud_.empty()) return out;
    const double g = params_.grid_cell, r2 = radius * radius;
    const auto x0 = detail::cell_floor(center.x() - radius, g), x1 = detail::cell_floor(center.x() + radius, g);
    const auto y0 = detail::cell_floor(center.y() - radius, g), y1 = detail::cell_floor(center.y() + radius, g);
    for (auto x = x0; x <= x1; ++x)
      for (auto y = y0; y <= y1; ++y)
        for (auto z = zlo_; z <= zhi_; ++z) {
          const auto it = grid_.find(detail::pack_cell({x, y, z}));
          if (it == grid_.end()) continue;
          for (auto i : it->second) {
            if (label && cloud_.labels[i] != *label) continue;
            const Point3& p = cloud_.points[i];
            const double dx = p.x() - center.x(), dy = p.y() - center.y();
            if (dx * dx + dy * dy <= r2) out.push_back(i);
          }
        }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Nearest ground point (3D distance, ties by index) within max_dist.
  std::optional<std::size_t> nearest_ground(const Point3& q, double max_dist) const {
    const double g = params_.grid_cell;
    std::optional<std::size_t> best;
    double best_d = max_dist;
    for (auto x = detail::cell_floor(q.x() - max_dist, g); x <= detail::cell_floor(q.x() + max_dist, g); ++x)
      for (auto y = detail::cell_floor(q.y() - max_dist, g); y <= detail::cell_floor(q.y() + max_dist, g); ++y)
        for (auto z = detail::cell_floor(q.z() - max_dist, g); z <= detail::cell_floor(q.z() + max_dist, g); ++z) {
          const auto it = grid_.find(detail::pack_cell({x, y, z}));
          if (it == grid_.end()) continue;
          for (auto i : it->second) {
            if (!cloud_.is_ground(i)) continue;
            const double d = (cloud_.points[i] - q).norm();
            if (d < best_d || (d == best_d && best && i < *best)) {
              best_d = d;
              best = i;
            }
          }
        }
    return best;
  }

  /// Obstacle footprints (z = 0) within planar `radius` of `center`.
  std::vector<Point3> footprints_within(const Point3& center, double radius) const {
    std::vector<Point3> out;
    const double r2 = radius * radius;
    const auto x0 = detail::cell_floor(center.x() - radius, kFootprintBucket);
    const auto x1 = detail::cell_floor(center.x() + radius, kFootprintBucket);
    const auto y0 = detail::cell_floor(center.y() - radius, kFootprintBucket);
    const auto y1 = detail::cell_floor(center.y() + radius, kFootprintBucket);
    for (auto x = x0; x <= x1; ++x)
      for (auto y = y0; y <= y1; ++y) {
        const auto it = footprint_grid_.find(detail::pack2(x, y));
        if (it == footprint_grid_.end()) continue;
        for (auto i : it->second) {
          const Point3& f = footprints_[i];
          const double dx = f.x() - center.x(), dy = f.y() - center.y();
          if (dx * dx + dy * dy <= r2) out.push_back(f);
        }
      }
    return out;
  }

  /// Scan index of the first ground return in the planar cell holding `p`;
  /// INT_MAX when the cell has never been observed.
  int cell_first_seen(const Point3& p) const {
    const auto it = observed_.find(observed_key(p));
    return it == observed_.end() ? std::numeric_limits<int>::max() : it->second;
  }

  bool in_band(const Point3& p) const {
    return band_.count(detail::pack2(detail::cell_floor(p.x(), params_.band_cell),
                                     detail::cell_floor(p.y(), params_.band_cell))) != 0;
  }

 private:
  static constexpr double kFootprintBucket = 2.0;
  static constexpr double kSweepBin = 0.5 * 3.14159265358979323846 / 180.0;

  std::uint64_t grid_key(const Point3& p) const {
    const double g = params_.grid_cell;
    return detail::pack_cell({detail::cell_floor(p.x(), g), detail::cell_floor(p.y(), g),
                              detail::cell_floor(p.z(), g)});
  }

  std::uint64_t observed_key(const Point3& p) const {
    return detail::pack2(detail::cell_floor(p.x(), params_.observed_cell),
                         detail::cell_floor(p.y(), params_.observed_cell));
  }

  bool has_neighbor(const Point3& p, Label label) const {
    const double r = params_.merge_radius, g = params_.grid_cell, r2 = r * r;
    for (auto x = detail::cell_floor(p.x() - r, g); x <= detail::cell_floor(p.x() + r, g); ++x)
      for (auto y = detail::cell_floor(p.y() - r, g); y <= detail::cell_floor(p.y() + r, g); ++y)
        for (auto z = detail::cell_floor(p.z() - r, g); z <= detail::cell_floor(p.z() + r, g); ++z) {
          const auto it = grid_.find(detail::pack_cell({x, y, z}));
          if (it == grid_.end()) continue;
          for (auto i : it->second)
            if (cloud_.labels[i] == label && (cloud_.points[i] - p).squaredNorm() <= r2) return true;
        }
    return false;
  }

  void append(const Point3& p, Label label, int scan_index) {
    const auto idx = static_cast<std::uint32_t>(cloud_.size());
    cloud_.push_back(p, label, scan_index);
    ids_.push_back(next_id_++);
    grid_[grid_key(p)].push_back(idx);
    if (label == Label::Ground) observed_.try_emplace(observed_key(p), scan_index);
    const auto z = detail::cell_floor(p.z(), params_.grid_cell);
    if (idx == 0) {
      zlo_ = zhi_ = z;
    } else {
      zlo_ = std::min(zlo_, z);
      zhi_ = std::max(zhi_, z);
    }
  }

  void add_footprint(const Point3& f, std::vector<std::uint64_t>& newly_banned) {
    const auto fi = static_cast<std::uint32_t>(footprints_.size());
    footprints_.push_back(f);
    footprint_grid_[detail::pack2(detail::cell_floor(f.x(), kFootprintBucket),
                                  detail::cell_floor(f.y(), kFootprintBucket))]
        .push_back(fi);
    roadmap_.block_around(f);
    const double b = params_.band_cell, rc = params_.removal_clearance, rc2 = rc * rc;
    for (auto x = detail::cell_floor(f.x() - rc, b); x <= detail::cell_floor(f.x() + rc, b); ++x)
      for (auto y = detail::cell_floor(f.y() - rc, b); y <= detail::cell_floor(f.y() + rc, b); ++y) {
        const double dx = (x + 0.5) * b - f.x(), dy = (y + 0.5) * b - f.y();
        if (dx * dx + dy * dy > rc2) continue;
        const auto key = detail::pack2(x, y);
        if (band_.insert(key).second) newly_banned.push_back(key);
      }
  }

  std::size_t remove_banned_ground(const std::vector<std::uint64_t>& banned) {
    // Grid columns touched by the newly banned band cells.
    const double g = params_.grid_cell, b = params_.band_cell;
    std::unordered_set<std::uint64_t> columns;
    for (auto k : banned) {
      const double cx = (detail::unpack2_x(k) + 0.5) * b, cy = (detail::unpack2_y(k) + 0.5) * b;
      columns.insert(detail::pack2(detail::cell_floor(cx, g), detail::cell_floor(cy, g)));
    }
    std::vector<bool> drop(cloud_.size(), false);
    std::size_t n = 0;
    for (auto col : columns)
      for (auto z = zlo_; z <= zhi_; ++z) {
        const auto it = grid_.find(
            detail::pack_cell({detail::unpack2_x(col), detail::unpack2_y(col), z}));
        if (it == grid_.end()) continue;
        for (auto i : it->second)
          if (cloud_.is_ground(i) && !drop[i] && in_band(cloud_.points[i])) {
            drop[i] = true;
            ++n;
          }
      }
    if (n == 0) return 0;
    std::vector<std::uint32_t> remap(cloud_.size());
    std::uint32_t next = 0;
    for (std::size_t i = 0; i < cloud_.size(); ++i) remap[i] = drop[i] ? UINT32_MAX : next++;
    cloud_.erase_flagged(drop);
    std::size_t w = 0;
    for (std::size_t i = 0; i < drop.size(); ++i)
      if (!drop[i]) ids_[w++] = ids_[i];
    ids_.resize(w);
    for (auto& [key, members] : grid_) {
      std::size_t w = 0;
      for (auto i : members)
        if (remap[i] != UINT32_MAX) members[w++] = remap[i];
      members.resize(w);
    }
    return n;
  }

  /// Marks roadmap cells under the ray from the sensor to a ground return.
  void sweep(const Point3& origin, const Point3& hit) {
    const double len = planar_distance(origin, hit);
    const double step = params_.roadmap_cell * 0.5;
    const int n = static_cast<int>(std::ceil(len / step));
    const double z0 = hit.z();
    for (int s = 0; s <= n; ++s) {
      const double t = n == 0 ? 1.0 : static_cast<double>(s) / n;
      const Point3 q(origin.x() + t * (hit.x() - origin.x()), origin.y() + t * (hit.y() - origin.y()), z0);
      if (in_band(q)) continue;
      roadmap_.observe(q);
    }
  }

  MapParams params_;
  LabeledPointCloud cloud_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grid_;
  std::int64_t zlo_ = 0, zhi_ = 0;
  GroundRoadmap roadmap_;
  std::unordered_set<std::uint64_t> footprint_cells_;
  std::vector<Point3> footprints_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> footprint_grid_;
  std::unordered_set<std::uint64_t> band_;
  std::unordered_map<std::uint64_t, int> observed_;
  std::vector<std::uint64_t> ids_;
  std::uint64_t next_id_ = 0;
};

}  // namespace oscan
