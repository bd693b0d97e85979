#pragma once

#include "oscan/core/point_cloud.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

namespace oscan {

struct Neighbor {
  std::size_t index;
  double distance;
};

namespace detail {

using CellKey = std::array<std::int64_t, 3>;

inline std::uint64_t pack_cell(const CellKey& c) {
  // 21 bits per axis, offset so negative cells pack cleanly.
  constexpr std::int64_t kOffset = 1 << 20;
  constexpr std::uint64_t kMask = (1u << 21) - 1;
  return (static_cast<std::uint64_t>(c[0] + kOffset) & kMask) |
         ((static_cast<std::uint64_t>(c[1] + kOffset) & kMask) << 21) |
         ((static_cast<std::uint64_t>(c[2] + kOffset) & kMask) << 42);
}

inline bool neighbor_less(const Neighbor& a, const Neighbor& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.index < b.index;
}

}  // namespace detail

/// Uniform hash grid over an immutable point snapshot.
///
/// Radius and k-nearest queries return exactly what a linear scan would:
/// radius results in ascending index order, kNN results by (distance, index).
class SpatialIndex {
 public:
  explicit SpatialIndex(std::span<const Point3> points, double cell_size = 1.0)
      : points_(points.begin(), points.end()), cell_(cell_size) {
    if (points_.empty()) throw EmptyInputError("SpatialIndex: empty point set");
    if (!(cell_size > 0.0)) throw InvalidArgument("SpatialIndex: cell size must be positive");

    std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed;
    keyed.reserve(points_.size());
    lo_ = hi_ = cell_of(points_[0]);
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!is_finite(points_[i])) throw InvalidArgument("SpatialIndex: non-finite point");
      const auto c = cell_of(points_[i]);
      for (int a = 0; a < 3; ++a) {
        lo_[a] = std::min(lo_[a], c[a]);
        hi_[a] = std::max(hi_[a], c[a]);
      }
      keyed.emplace_back(detail::pack_cell(c), static_cast<std::uint32_t>(i));
    }
    std::sort(keyed.begin(), keyed.end());
    order_.resize(keyed.size());
    cells_.reserve(keyed.size() / 4 + 1);
    for (std::size_t i = 0; i < keyed.size();) {
      std::size_t j = i;
      while (j < keyed.size() && keyed[j].first == keyed[i].first) {
        order_[j] = keyed[j].second;
        ++j;
      }
      cells_.emplace(keyed[i].first, std::make_pair(static_cast<std::uint32_t>(i),
                                                    static_cast<std::uint32_t>(j)));
      i = j;
    }
  }

  std::size_t size() const { return points_.size(); }
  const std::vector<Point3>& points() const { return points_; }
  const Point3& point(std::size_t i) const { return points_[i]; }
  double cell_size() const { return cell_; }

  /// All points with ‖p − q‖ ≤ radius, ascending index.
  std::vector<std::size_t> radius(const Point3& q, double radius) const {
    std::vector<std::size_t> out;
    for_each_in_radius(q, radius, [&](std::size_t i, double) { out.push_back(i); });
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Calls fn(index, distance) for each point within radius (unordered).
  template <typename Fn>
  void for_each_in_radius(const Point3& q, double radius, Fn&& fn) const {
    if (radius < 0.0) return;
    const double r2 = radius * radius;
    CellKey lo, hi;
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(lo_[a], floor_cell(q[a] - radius));
      hi[a] = std::min(hi_[a], floor_cell(q[a] + radius));
    }
    for (auto x = lo[0]; x <= hi[0]; ++x)
      for (auto y = lo[1]; y <= hi[1]; ++y)
        for (auto z = lo[2]; z <= hi[2]; ++z) {
          auto it = cells_.find(detail::pack_cell({x, y, z}));
          if (it == cells_.end()) continue;
          for (auto k = it->second.first; k < it->second.second; ++k) {
            const auto idx = order_[k];
            const double d2 = (points_[idx] - q).squaredNorm();
            if (d2 <= r2) fn(static_cast<std::size_t>(idx), std::sqrt(d2));
          }
        }
  }

  /// True if any point lies within radius of q.
  bool any_within(const Point3& q, double radius) const {
    return any_of_in_radius(q, radius, [](std::size_t) { return true; });
  }

  /// True if pred(index) holds for some point within radius of q. Stops at
  /// the first hit, searching q's own cell first.
  template <typename Pred>
  bool any_of_in_radius(const Point3& q, double radius, Pred&& pred) const {
    if (radius < 0.0) return false;
    const double r2 = radius * radius;
    const auto c = cell_of(q);
    CellKey lo, hi;
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(lo_[a], floor_cell(q[a] - radius));
      hi[a] = std::min(hi_[a], floor_cell(q[a] + radius));
    }
    auto scan = [&](const CellKey& cell) {
      auto it = cells_.find(detail::pack_cell(cell));
      if (it == cells_.end()) return false;
      for (auto k = it->second.first; k < it->second.second; ++k) {
        const auto idx = order_[k];
        if ((points_[idx] - q).squaredNorm() <= r2 && pred(static_cast<std::size_t>(idx)))
          return true;
      }
      return false;
    };
    const bool own_in_range = c[0] >= lo[0] && c[0] <= hi[0] && c[1] >= lo[1] && c[1] <= hi[1] &&
                              c[2] >= lo[2] && c[2] <= hi[2];
    if (own_in_range && scan(c)) return true;
    for (auto x = lo[0]; x <= hi[0]; ++x)
      for (auto y = lo[1]; y <= hi[1]; ++y)
        for (auto z = lo[2]; z <= hi[2]; ++z) {
          if (x == c[0] && y == c[1] && z == c[2]) continue;
          if (scan({x, y, z})) return true;
        }
    return false;
  }

  /// k nearest points ordered by (distance, index). k ≥ size returns all.
  std::vector<Neighbor> knn(const Point3& q, std::size_t k) const {
    std::vector<Neighbor> best;
    if (k == 0) return best;
    k = std::min(k, points_.size());
    const auto c = cell_of(q);
    std::int64_t max_ring = 0;
    for (int a = 0; a < 3; ++a)
      max_ring = std::max({max_ring, std::abs(c[a] - lo_[a]), std::abs(hi_[a] - c[a])});

    auto consider = [&](std::uint32_t idx) {
      Neighbor n{idx, (points_[idx] - q).norm()};
      if (best.size() < k) {
        best.push_back(n);
        std::push_heap(best.begin(), best.end(), detail::neighbor_less);
      } else if (detail::neighbor_less(n, best.front())) {
        std::pop_heap(best.begin(), best.end(), detail::neighbor_less);
        best.back() = n;
        std::push_heap(best.begin(), best.end(), detail::neighbor_less);
      }
    };

    for (std::int64_t ring = 0; ring <= max_ring; ++ring) {
      visit_ring(c, ring, [&](std::uint64_t key) {
        auto it = cells_.find(key);
        if (it == cells_.end()) return;
        for (auto j = it->second.first; j < it->second.second; ++j) consider(order_[j]);
      });
      // Unvisited cells are at least `ring * cell` away from q.
      if (best.size() == k && best.front().distance < static_cast<double>(ring) * cell_) break;
    }
    std::sort_heap(best.begin(), best.end(), detail::neighbor_less);
    return best;
  }

  std::optional<Neighbor> nearest(const Point3& q) const {
    auto r = knn(q, 1);
    if (r.empty()) return std::nullopt;
    return r.front();
  }

 private:
  using CellKey = detail::CellKey;

  std::int64_t floor_cell(double v) const {
    return static_cast<std::int64_t>(std::floor(v / cell_));
  }
  CellKey cell_of(const Point3& p) const {
    return {floor_cell(p.x()), floor_cell(p.y()), floor_cell(p.z())};
  }

  template <typename Fn>
  void visit_ring(const CellKey& c, std::int64_t ring, Fn&& fn) const {
    const std::int64_t x0 = std::max(lo_[0], c[0] - ring), x1 = std::min(hi_[0], c[0] + ring);
    const std::int64_t y0 = std::max(lo_[1], c[1] - ring), y1 = std::min(hi_[1], c[1] + ring);
    const std::int64_t z0 = std::max(lo_[2], c[2] - ring), z1 = std::min(hi_[2], c[2] + ring);
    for (auto x = x0; x <= x1; ++x)
      for (auto y = y0; y <= y1; ++y) {
        if (std::abs(x - c[0]) == ring || std::abs(y - c[1]) == ring) {
          for (auto z = z0; z <= z1; ++z) fn(detail::pack_cell({x, y, z}));
        } else {
          if (c[2] - ring >= z0) fn(detail::pack_cell({x, y, c[2] - ring}));
          if (ring > 0 && c[2] + ring <= z1) fn(detail::pack_cell({x, y, c[2] + ring}));
        }
      }
  }

  std::vector<Point3> points_;
  double cell_;
  CellKey lo_{}, hi_{};
  std::vector<std::uint32_t> order_;
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> cells_;
};

inline SpatialIndex build_index(std::span<const Point3> cloud, double cell_size = 1.0) {
  return SpatialIndex(cloud, cell_size);
}

}  // namespace oscan
