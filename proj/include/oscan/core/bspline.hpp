#pragma once

#include "oscan/core/polyline.hpp"

#include <algorithm>
#include <vector>

namespace oscan {

/// Clamped B-spline with a uniform interior knot vector.
class BSplineCurve {
 public:
  BSplineCurve(std::vector<Point3> controls, int degree = 3)
      : degree_(degree), controls_(std::move(controls)) {
    if (degree_ < 1) throw InvalidArgument("BSplineCurve: degree must be >= 1");
    if (static_cast<int>(controls_.size()) < degree_ + 1)
      throw InvalidArgument("BSplineCurve: need at least degree+1 control points");
    const int n = static_cast<int>(controls_.size());
    const int spans = n - degree_;
    knots_.assign(degree_ + 1, 0.0);
    for (int i = 1; i < spans; ++i) knots_.push_back(static_cast<double>(i) / spans);
    knots_.insert(knots_.end(), degree_ + 1, 1.0);
  }

  int degree() const { return degree_; }
  const std::vector<Point3>& controls() const { return controls_; }
  const std::vector<double>& knots() const { return knots_; }

  /// de Boor evaluation; t is clamped to [0, 1].
  Point3 operator()(double t) const {
    t = std::clamp(t, 0.0, 1.0);
    const int n = static_cast<int>(controls_.size());
    const int p = degree_;
    // Knot span k with knots_[k] <= t < knots_[k+1], last span closed.
    int k = p;
    while (k < n - 1 && t >= knots_[k + 1]) ++k;

    std::vector<Point3> d(p + 1);
    for (int j = 0; j <= p; ++j) d[j] = controls_[j + k - p];
    for (int r = 1; r <= p; ++r)
      for (int j = p; j >= r; --j) {
        const int i = j + k - p;
        const double den = knots_[i + p - r + 1] - knots_[i];
        const double a = den > 0.0 ? (t - knots_[i]) / den : 0.0;
        d[j] = (1.0 - a) * d[j - 1] + a * d[j];
      }
    return d[p];
  }

  /// Polyline through `samples + 1` uniformly spaced parameter values.
  PathPolyline sample(int samples) const {
    PathPolyline out;
    for (int i = 0; i <= samples; ++i) out.append((*this)(static_cast<double>(i) / samples));
    return out;
  }

 private:
  int degree_;
  std::vector<Point3> controls_;
  std::vector<double> knots_;
};

inline Point3 eval_bspline(const BSplineCurve& curve, double t) { return curve(t); }

}  // namespace oscan
