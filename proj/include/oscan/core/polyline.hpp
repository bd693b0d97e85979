#pragma once

#include "oscan/core/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace oscan {

/// Ordered waypoints with cumulative arc length. Consecutive duplicates are
/// dropped on construction.
class PathPolyline {
 public:
  PathPolyline() = default;

  explicit PathPolyline(std::vector<Point3> waypoints) {
    for (auto& p : waypoints) append(p);
  }

  void append(const Point3& p) {
    if (!is_finite(p)) throw InvalidArgument("PathPolyline: non-finite waypoint");
    if (!pts_.empty() && (pts_.back() - p).norm() <= 1e-12) return;
    cum_.push_back(pts_.empty() ? 0.0 : cum_.back() + (p - pts_.back()).norm());
    pts_.push_back(p);
  }

  const std::vector<Point3>& waypoints() const { return pts_; }
  const std::vector<double>& cumulative() const { return cum_; }
  std::size_t size() const { return pts_.size(); }
  bool empty() const { return pts_.empty(); }
  double length() const { return cum_.empty() ? 0.0 : cum_.back(); }
  const Point3& front() const { return pts_.front(); }
  const Point3& back() const { return pts_.back(); }

  /// Point at arc length s, clamped to [0, length].
  Point3 at(double s) const {
    if (pts_.empty()) throw EmptyInputError("PathPolyline::at on empty path");
    if (s <= 0.0 || pts_.size() == 1) return pts_.front();
    if (s >= length()) return pts_.back();
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    const auto i = static_cast<std::size_t>(it - cum_.begin());
    const double t = (s - cum_[i - 1]) / (cum_[i] - cum_[i - 1]);
    return pts_[i - 1] + t * (pts_[i] - pts_[i - 1]);
  }

  /// Samples at uniform arc-length spacing, always including both ends.
  PathPolyline resample(double spacing) const {
    if (pts_.empty()) return {};
    PathPolyline out;
    const double len = length();
    const int steps = std::max(1, static_cast<int>(std::ceil(len / spacing - 1e-9)));
    for (int i = 0; i <= steps; ++i) out.append(at(len * i / steps));
    return out;
  }

  /// Distance from q to the closest point on the polyline.
  double distance_to(const Point3& q) const {
    if (pts_.size() == 1) return (q - pts_[0]).norm();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < pts_.size(); ++i) {
      const Point3 ab = pts_[i] - pts_[i - 1];
      const double t = std::clamp((q - pts_[i - 1]).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
      best = std::min(best, (pts_[i - 1] + t * ab - q).norm());
    }
    return best;
  }

 private:
  std::vector<Point3> pts_;
  std::vector<double> cum_;
};

/// Unsigned turning angle at each interior waypoint.
inline std::vector<double> turning_angles(const PathPolyline& path) {
  std::vector<double> out;
  const auto& w = path.waypoints();
  for (std::size_t i = 1; i + 1 < w.size(); ++i) {
    const Point3 a = w[i] - w[i - 1];
    const Point3 b = w[i + 1] - w[i];
    const double c = a.dot(b) / (a.norm() * b.norm());
    out.push_back(std::acos(std::clamp(c, -1.0, 1.0)));
  }
  return out;
}

/// Sum of absolute turning angles (radians); zero for fewer than 3 waypoints.
inline double accumulated_curvature(const PathPolyline& path) {
  double total = 0.0;
  for (double a : turning_angles(path)) total += a;
  return total;
}

inline double max_turning_angle(const PathPolyline& path) {
  double m = 0.0;
  for (double a : turning_angles(path)) m = std::max(m, a);
  return m;
}

}  // namespace oscan
