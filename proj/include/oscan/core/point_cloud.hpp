#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace oscan {

using Point3 = Eigen::Vector3d;

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class PlannerError : public Error {
 public:
  using Error::Error;
};

enum class Label : std::uint8_t { Ground = 0, Obstacle = 1 };

inline constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

inline bool is_set(double v) { return !std::isnan(v); }

inline bool is_finite(const Point3& p) { return p.allFinite(); }

inline double planar_distance(const Point3& a, const Point3& b) {
  return (a.head<2>() - b.head<2>()).norm();
}

inline Point3 flatten(const Point3& p) { return {p.x(), p.y(), 0.0}; }

inline std::vector<Point3> flatten(std::span<const Point3> pts) {
  std::vector<Point3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(flatten(p));
  return out;
}

/// Accumulated scan points with per-point planning attributes.
///
/// All attribute arrays are kept the same length as `points`. Unset values are
/// NaN. Stored explorability only ever decreases once set.
struct LabeledPointCloud {
  std::vector<Point3> points;
  std::vector<Label> labels;
  std::vector<double> explorability;
  std::vector<double> observability;
  std::vector<double> guidance;
  std::vector<double> fractal_dim;
  std::vector<int> first_seen;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void reserve(std::size_t n) {
    points.reserve(n);
    labels.reserve(n);
    explorability.reserve(n);
    observability.reserve(n);
    guidance.reserve(n);
    fractal_dim.reserve(n);
    first_seen.reserve(n);
  }

  void push_back(const Point3& p, Label label, int scan_index = 0) {
    points.push_back(p);
    labels.push_back(label);
    explorability.push_back(kUnset);
    observability.push_back(kUnset);
    guidance.push_back(kUnset);
    fractal_dim.push_back(kUnset);
    first_seen.push_back(scan_index);
  }

  bool is_ground(std::size_t i) const { return labels[i] == Label::Ground; }

  /// Removes every point whose flag is set; keeps attributes aligned and the
  /// relative order of survivors. Returns the number removed.
  std::size_t erase_flagged(const std::vector<bool>& remove) {
    std::size_t w = 0;
    for (std::size_t r = 0; r < size(); ++r) {
      if (remove[r]) continue;
      if (w != r) {
        points[w] = points[r];
        labels[w] = labels[r];
        explorability[w] = explorability[r];
        observability[w] = observability[r];
        guidance[w] = guidance[r];
        fractal_dim[w] = fractal_dim[r];
        first_seen[w] = first_seen[r];
      }
      ++w;
    }
    const std::size_t removed = size() - w;
    points.resize(w);
    labels.resize(w);
    explorability.resize(w);
    observability.resize(w);
    guidance.resize(w);
    fractal_dim.resize(w);
    first_seen.resize(w);
    return removed;
  }

  bool consistent() const {
    const auto n = points.size();
    return labels.size() == n && explorability.size() == n &&
           observability.size() == n && guidance.size() == n &&
           fractal_dim.size() == n && first_seen.size() == n;
  }

  std::vector<std::size_t> indices_with(Label label) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i)
      if (labels[i] == label) out.push_back(i);
    return out;
  }
};

}  // namespace oscan
