#pragma once

#include "oscan/core/bspline.hpp"
#include "oscan/core/spatial_index.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <string>
#include <optional>
#include <vector>

namespace oscan {

/// Planar distance to the nearest known obstacle footprint.
using ClearanceFn = std::function<double(const Point3&)>;

/// Clearance against a fixed set of footprints (their z is ignored).
inline ClearanceFn footprint_clearance(std::span<const Point3> footprints) {
  if (footprints.empty())
    return [](const Point3&) { return std::numeric_limits<double>::infinity(); };
  auto index = std::make_shared<SpatialIndex>(flatten(footprints), 1.0);
  return [index](const Point3& p) { return index->nearest(flatten(p))->distance; };
}

/// Under-scanned points in ascending order of local dimension (ties keep
/// insertion order). Removal never reorders the survivors.
class QualityQueue {
 public:
  struct Entry {
    Point3 position;
    double dimension;
  };

  QualityQueue() = default;
  explicit QualityQueue(std::vector<Entry> entries) : entries_(std::move(entries)) {
    std::stable_sort(entries_.begin(), entries_.end(),
                     [](const Entry& a, const Entry& b) { return a.dimension < b.dimension; });
  }

  bool empty() const { return head_ == entries_.size(); }
  std::size_t size() const { return entries_.size() - head_; }
  const Entry& top() const { return entries_[head_]; }
  void pop() { ++head_; }

  /// Drops queued points within planar `radius` of `center`.
  void suppress_near(const Point3& center, double radius) {
    auto first = entries_.begin() + static_cast<std::ptrdiff_t>(head_);
    entries_.erase(std::remove_if(first, entries_.end(),
                                  [&](const Entry& e) {
                                    return planar_distance(e.position, center) <= radius;
                                  }),
                   entries_.end());
  }

  std::vector<double> dimensions() const {
    std::vector<double> out;
    for (std::size_t i = head_; i < entries_.size(); ++i) out.push_back(entries_[i].dimension);
    return out;
  }

 private:
  std::vector<Entry> entries_;
  std::size_t head_ = 0;
};

struct RefineParams {
  double sample_spacing = 0.5;
  double displacement = 1.5;       // d_c
  double suppression_radius = 3.0;  // r_c
  double clearance = 1.0;
  int projection_rounds = 5;
  double dense_spacing = 0.1;
  double max_smoothing_deviation = 0.5;  // where no control is displaced
};

struct ControlPoint {
  Point3 position;
  Point3 anchor;  // the base-path sample it came from
  double arc = 0.0;
};

struct ControlPointSet {
  std::vector<ControlPoint> points;  // ordered by arc length of the anchor
  double displacement = 1.5;
  double suppression_radius = 3.0;
};

/// Pulls a base path toward under-scanned points.
///
/// The base path is sampled at `sample_spacing`. Each popped queue head
/// attracts the nearest remaining interior sample, which moves horizontally
/// toward it by min(d_c, distance) and is emitted as a control point; samples
/// within r_c of it are consumed and queued points within r_c of the control
/// point are dropped. Samples left when the queue runs out are thinned to r_c
/// spacing; both endpoints are always kept in place. A control point that
/// lands closer than the clearance to an obstacle is pulled back along its
/// displacement to the clearance boundary.
inline ControlPointSet select_control_points(const PathPolyline& base, QualityQueue queue,
                                             const ClearanceFn& clearance,
                                             const RefineParams& params = {}) {
  if (base.empty()) throw EmptyInputError("select_control_points: empty base path");
  const auto samples = base.resample(params.sample_spacing);
  const auto& pts = samples.waypoints();
  const auto& arc = samples.cumulative();
  const std::size_t n = pts.size();
  const double rc = params.suppression_radius;
  ControlPointSet out;
  out.displacement = params.displacement;
  out.suppression_radius = rc;
  std::vector<bool> alive(n, true);
  auto consume = [&](const Point3& c) {
    for (std::size_t i = 0; i < n; ++i)
      if (alive[i] && (pts[i] - c).norm() <= rc) alive[i] = false;
  };
  auto emit = [&](std::size_t i, const Point3& p) {
    out.points.push_back({p, pts[i], arc[i]});
  };

  while (!queue.empty() && std::find(alive.begin(), alive.end(), true) != alive.end()) {
    const Point3 target = queue.top().position;
    queue.pop();
    std::size_t best = n;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
      if (alive[i] && (pts[i] - target).norm() < best_d) {
        best_d = (pts[i] - target).norm();
        best = i;
      }
    Point3 moved = pts[best];
    const bool endpoint = best == 0 || best + 1 == n;
    Point3 dir(target.x() - moved.x(), target.y() - moved.y(), 0.0);
    const double reach = dir.norm();
    if (!endpoint && reach > 1e-12) {
      dir /= reach;
      double step = std::min(params.displacement, reach);
      if (clearance(pts[best] + step * dir) < params.clearance) {
        // Largest step along the ray that keeps the clearance.
        double lo = 0.0, hi = step;
        for (int it = 0; it < 40; ++it) {
          const double mid = 0.5 * (lo + hi);
          (clearance(pts[best] + mid * dir) >= params.clearance ? lo : hi) = mid;
        }
        step = lo;
      }
      moved = pts[best] + step * dir;
    }
    emit(best, moved);
    consume(pts[best]);
    queue.suppress_near(moved, rc);
  }

  // Undisplaced remainder at r_c spacing, plus the endpoints.
  double last = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (!alive[i]) continue;
    if (i == 0 || i + 1 == n || arc[i] - last >= rc - 1e-9) {
      emit(i, pts[i]);
      last = arc[i];
    }
  }
  auto has = [&](std::size_t i) {
    return std::any_of(out.points.begin(), out.points.end(),
                       [&](const ControlPoint& c) { return c.arc == arc[i]; });
  };
  if (!has(0)) emit(0, pts[0]);
  if (!has(n - 1)) emit(n - 1, pts[n - 1]);
  std::stable_sort(out.points.begin(), out.points.end(),
                   [](const ControlPoint& a, const ControlPoint& b) { return a.arc < b.arc; });
  return out;
}

struct RefineResult {
  PathPolyline path;  // dense samples of the curve, or the base path on fallback
  std::optional<BSplineCurve> curve;
  bool refined = false;
  int rounds = 0;
  std::string note;
};

namespace detail {

/// Lifts a control polygon to at least four points by inserting evenly
/// spaced points on its longest legs.
inline std::vector<ControlPoint> pad_controls(std::vector<ControlPoint> c) {
  while (c.size() < 4) {
    std::size_t leg = 0;
    double longest = -1.0;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
      const double d = (c[i + 1].position - c[i].position).norm();
      if (d > longest) {
        longest = d;
        leg = i;
      }
    }
    ControlPoint mid;
    mid.position = 0.5 * (c[leg].position + c[leg + 1].position);
    mid.anchor = 0.5 * (c[leg].anchor + c[leg + 1].anchor);
    mid.arc = 0.5 * (c[leg].arc + c[leg + 1].arc);
    c.insert(c.begin() + static_cast<std::ptrdiff_t>(leg + 1), mid);
  }
  return c;
}

inline PathPolyline dense_samples(const BSplineCurve& curve, double spacing) {
  double poly = 0.0;
  const auto& c = curve.controls();
  for (std::size_t i = 0; i + 1 < c.size(); ++i) poly += (c[i + 1] - c[i]).norm();
  const int samples = std::max(16, static_cast<int>(std::ceil(poly / spacing)) + 1);
  return curve.sample(samples);
}

}  // namespace detail

/// Clamped cubic B-spline from `start` through the controls to `goal`.
///
/// Dense samples must keep the clearance, and where the shape is not pulled
/// by a displaced control they must stay within `max_smoothing_deviation` of
/// the base path. A clearance violation moves the control point with the most
/// influence there back onto its base-path anchor; a violation under an
/// undisplaced control inserts the nearest base sample as an extra control.
/// After `projection_rounds` failed rounds the base path is returned instead.
inline RefineResult refine_path(const Point3& start, const Point3& goal,
                                const ControlPointSet& controls, const ClearanceFn& clearance,
                                const PathPolyline& base, const RefineParams& params = {}) {
  if ((goal - start).norm() <= 1e-9) throw InvalidArgument("refine_path: start equals goal");
  const double total = base.empty() ? (goal - start).norm() : base.length();
  std::vector<ControlPoint> c;
  c.push_back({start, start, 0.0});
  for (const auto& p : controls.points)
    if ((p.position - start).norm() > 1e-6 && (p.position - goal).norm() > 1e-6) c.push_back(p);
  c.push_back({goal, goal, total});
  c = detail::pad_controls(std::move(c));

  const auto base_samples = base.empty() ? PathPolyline{} : base.resample(params.sample_spacing);
  auto nearest_base_sample = [&](const Point3& q) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < base_samples.size(); ++s)
      if ((base_samples.waypoints()[s] - q).norm() < (base_samples.waypoints()[best] - q).norm())
        best = s;
    return ControlPoint{base_samples.waypoints()[best], base_samples.waypoints()[best],
                        base_samples.cumulative()[best]};
  };
  RefineResult r;
  for (int round = 0; round <= params.projection_rounds; ++round) {
    std::vector<Point3> ctrl;
    for (const auto& p : c) ctrl.push_back(p.position);
    BSplineCurve curve(ctrl, 3);
    auto dense = detail::dense_samples(curve, params.dense_spacing);
    // Greville abscissae locate each control's peak influence.
    const auto& k = curve.knots();
    std::vector<double> greville(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) greville[j] = (k[j + 1] + k[j + 2] + k[j + 3]) / 3.0;
    auto dominant = [&](double t) {
      std::size_t j = 1;
      for (std::size_t q = 1; q + 1 < c.size(); ++q)
        if (std::abs(greville[q] - t) < std::abs(greville[j] - t)) j = q;
      return j;
    };
    auto displaced = [&](std::size_t j) { return (c[j].position - c[j].anchor).norm() > 1e-9; };

    std::vector<std::pair<double, bool>> bad;  // (t, clearance violated)
    const int m = static_cast<int>(dense.size());
    for (int i = 0; i < m; ++i) {
      const Point3& p = dense.waypoints()[i];
      const double t = m > 1 ? static_cast<double>(i) / (m - 1) : 0.0;
      if (clearance(p) < params.clearance) {
        bad.emplace_back(t, true);
      } else if (!base.empty() && base.distance_to(p) > params.max_smoothing_deviation) {
        const auto j = dominant(t);
        if (!displaced(j) && !displaced(j - 1) && !displaced(j + 1)) bad.emplace_back(t, false);
      }
    }
    r.rounds = round;
    if (bad.empty()) {
      r.path = std::move(dense);
      r.curve = std::move(curve);
      r.refined = true;
      return r;
    }
    if (round == params.projection_rounds) break;
    std::vector<ControlPoint> inserts;
    std::vector<bool> touched(c.size(), false);
    for (const auto& [t, hit] : bad) {
      const auto j = dominant(t);
      if (j == 0 || j + 1 >= c.size() || touched[j]) continue;
      touched[j] = true;
      if (hit && displaced(j)) {
        c[j].position = c[j].anchor;
      } else if (!base_samples.empty()) {
        inserts.push_back(nearest_base_sample(curve(t)));
      }
    }
    for (const auto& ins : inserts) {
      const bool dup = std::any_of(c.begin(), c.end(), [&](const ControlPoint& p) {
        return (p.position - ins.position).norm() < 1e-6;
      });
      if (dup) continue;
      auto pos = std::upper_bound(c.begin() + 1, c.end() - 1, ins.arc,
                                  [](double a, const ControlPoint& p) { return a < p.arc; });
      c.insert(pos, ins);
    }
  }
  r.path = base;
  r.refined = false;
  r.note = "projection rounds exhausted";
  return r;
}

/// Full refinement of one traverse: control selection, spline fitting and
/// the fallback rules. The refined path is kept only when it also turns no
/// more sharply than the base path (both compared at the sample spacing).
inline RefineResult refine_traverse(const PathPolyline& base, const QualityQueue& queue,
                                    const ClearanceFn& clearance, const RefineParams& params = {}) {
  RefineResult r;
  r.path = base;
  if (base.size() < 2 || base.length() <= 1e-9) {
    r.note = "degenerate base path";
    return r;
  }
  const auto controls = select_control_points(base, queue, clearance, params);
  r = refine_path(base.front(), base.back(), controls, clearance, base, params);
  if (!r.refined) return r;
  const double refined_turn = max_turning_angle(r.path.resample(params.sample_spacing));
  const double base_turn = max_turning_angle(base.resample(params.sample_spacing));
  if (refined_turn > base_turn + 1e-9) {
    r.path = base;
    r.curve.reset();
    r.refined = false;
    r.note = "refined path turns more sharply than the base path";
  }
  return r;
}

}  // namespace oscan
