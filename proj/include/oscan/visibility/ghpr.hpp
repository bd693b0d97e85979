#pragma once

#include "oscan/core/convex_hull.hpp"
#include "oscan/core/spatial_index.hpp"

#include <cmath>
#include <deque>
#include <span>
#include <vector>

namespace oscan {

inline constexpr double kDefaultGhprAlpha = 1e4;

/// Radial GHPR transform with the linear kernel h(d) = alpha * max_d - d.
/// Points coincident with the viewpoint map to themselves.
inline std::vector<Point3> ghpr_transform(std::span<const Point3> cloud, const Point3& viewpoint,
                                          double alpha = kDefaultGhprAlpha) {
  if (cloud.empty()) throw EmptyInputError("ghpr_transform: empty cloud");
  if (!(alpha > 1.0)) throw InvalidArgument("ghpr_transform: alpha must exceed 1");
  double max_d = 0.0;
  for (const auto& p : cloud) max_d = std::max(max_d, (p - viewpoint).norm());
  const double scale = alpha * max_d;
  std::vector<Point3> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) {
    const Point3 r = p - viewpoint;
    const double d = r.norm();
    if (d == 0.0) {
      out.push_back(p);
    } else {
      out.push_back(viewpoint + r * ((scale - d) / d));
    }
  }
  return out;
}

/// Per-point visibility flags θ(p, viewpoint); same cardinality as the input.
using VisibilityResult = std::vector<bool>;

/// A point is visible when its transform lies on the convex hull of the
/// transformed cloud together with the viewpoint.
inline VisibilityResult visible_set(std::span<const Point3> cloud, const Point3& viewpoint,
                                    double alpha = kDefaultGhprAlpha) {
  VisibilityResult vis(cloud.size(), false);
  if (cloud.empty()) return vis;
  // Work in viewpoint-centered coordinates; the hull is translation invariant
  // and this keeps magnitudes at alpha * max_d instead of adding the offset.
  std::vector<Point3> local;
  local.reserve(cloud.size() + 1);
  for (const auto& p : cloud) local.push_back(p - viewpoint);
  auto hull_input = ghpr_transform(local, Point3::Zero(), alpha);
  hull_input.push_back(Point3::Zero());
  for (auto i : convex_hull_3d(hull_input))
    if (i < cloud.size()) vis[i] = true;
  return vis;
}

/// The last k robot viewpoints with the scan index at which each was taken.
class ViewpointHistory {
 public:
  struct Entry {
    Point3 position;
    int scan_index;
  };

  explicit ViewpointHistory(std::size_t capacity = 2) : capacity_(capacity) {
    if (capacity_ == 0) throw InvalidArgument("ViewpointHistory: capacity must be positive");
  }

  void push(const Point3& position, int scan_index) {
    if (!entries_.empty() && scan_index <= entries_.back().scan_index)
      throw InvalidArgument("ViewpointHistory: scan indices must increase");
    entries_.push_back({position, scan_index});
    while (entries_.size() > capacity_) entries_.pop_front();
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::deque<Entry>& entries() const { return entries_; }
  int oldest_index() const { return entries_.front().scan_index; }

 private:
  std::size_t capacity_;
  std::deque<Entry> entries_;
};

/// Binary observability-to-unknown for the points of `subset`.
///
/// ρ = 1 − ∏(1 − θ(p, v)) over historical viewpoints v, restricted to points
/// first seen after the oldest historical scan (newly observed relative to the
/// window). Obstacle points always get 0. Visibility is evaluated against the
/// subset itself. Result is aligned with `subset`.
inline std::vector<double> observability(const LabeledPointCloud& cloud,
                                         std::span<const std::size_t> subset,
                                         const ViewpointHistory& history,
                                         double alpha = kDefaultGhprAlpha) {
  std::vector<double> rho(subset.size(), 0.0);
  if (history.empty() || subset.empty()) return rho;
  const int oldest = history.oldest_index();
  bool any_candidate = false;
  for (auto i : subset)
    if (cloud.is_ground(i) && cloud.first_seen[i] > oldest) any_candidate = true;
  if (!any_candidate) return rho;

  std::vector<Point3> pts;
  pts.reserve(subset.size());
  for (auto i : subset) pts.push_back(cloud.points[i]);
  for (const auto& entry : history.entries()) {
    const auto vis = visible_set(pts, entry.position, alpha);
    for (std::size_t k = 0; k < subset.size(); ++k) {
      const auto i = subset[k];
      if (vis[k] && cloud.is_ground(i) && cloud.first_seen[i] > oldest) rho[k] = 1.0;
    }
  }
  return rho;
}

/// Gaussian-weighted average of a field over radius neighborhoods.
/// Points with no neighbor other than themselves keep their own value.
inline std::vector<double> smooth_observability(std::span<const Point3> points,
                                                std::span<const double> rho,
                                                double kernel_radius = 2.0,
                                                double kernel_sigma = 1.0) {
  if (points.size() != rho.size()) throw InvalidArgument("smooth_observability: size mismatch");
  std::vector<double> out(rho.begin(), rho.end());
  if (points.empty()) return out;
  const SpatialIndex index(points, std::max(kernel_radius / 2.0, 0.25));
  const double inv2s2 = 1.0 / (2.0 * kernel_sigma * kernel_sigma);
  for (std::size_t i = 0; i < points.size(); ++i) {
    double num = 0.0, den = 0.0;
    index.for_each_in_radius(points[i], kernel_radius, [&](std::size_t j, double d) {
      const double w = std::exp(-d * d * inv2s2);
      num += w * rho[j];
      den += w;
    });
    if (den > 0.0) out[i] = std::clamp(num / den, 0.0, 1.0);
  }
  return out;
}

}  // namespace oscan
