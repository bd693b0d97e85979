#pragma once

// Brute-force reference implementations used only by tests. None of these
// share code paths with the library routines they check.

#include "oscan/core/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <vector>

namespace oscan::oracle {

inline std::vector<Point3> random_points(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Point3> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(u(rng), u(rng), u(rng));
  return out;
}

inline std::vector<std::size_t> linear_radius(const std::vector<Point3>& pts, const Point3& q,
                                              double r) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if ((pts[i] - q).norm() <= r) out.push_back(i);
  return out;
}

inline std::vector<std::size_t> linear_knn(const std::vector<Point3>& pts, const Point3& q,
                                           std::size_t k) {
  std::vector<std::size_t> idx(pts.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return (pts[a] - q).norm() < (pts[b] - q).norm();
  });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

/// Extreme points by enumerating every triple as a candidate facet: a triple
/// is a facet when all points lie on one side of its plane. Points in general
/// position assumed; O(n^4).
inline std::set<std::size_t> brute_force_extreme_points(const std::vector<Point3>& pts,
                                                        double tol = 1e-12) {
  std::set<std::size_t> out;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        const Point3 nrm = (pts[j] - pts[i]).cross(pts[k] - pts[i]);
        if (nrm.norm() < 1e-15) continue;
        bool pos = false, neg = false;
        for (std::size_t m = 0; m < n && !(pos && neg); ++m) {
          if (m == i || m == j || m == k) continue;
          const double d = nrm.dot(pts[m] - pts[i]);
          if (d > tol) pos = true;
          if (d < -tol) neg = true;
        }
        if (!(pos && neg)) {
          out.insert(i);
          out.insert(j);
          out.insert(k);
        }
      }
  return out;
}

/// True when q lies inside or on the hull of `verts` (supporting-plane check
/// over brute-force facets of the vertex set).
inline bool inside_hull_of(const std::vector<Point3>& verts, const Point3& q, double tol) {
  const std::size_t n = verts.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        const Point3 nrm = (verts[j] - verts[i]).cross(verts[k] - verts[i]);
        if (nrm.norm() < 1e-15) continue;
        bool pos = false, neg = false;
        for (std::size_t m = 0; m < n && !(pos && neg); ++m) {
          if (m == i || m == j || m == k) continue;
          const double d = nrm.dot(verts[m] - verts[i]);
          if (d > 1e-12) pos = true;
          if (d < -1e-12) neg = true;
        }
        if (pos && neg) continue;
        const double side = nrm.normalized().dot(q - verts[i]);
        if (pos && side < -tol) return false;
        if (neg && side > tol) return false;
      }
  return true;
}

/// Ray-casting visibility with every point modeled as a disk of `radius`
/// facing the viewpoint. p is hidden when some point q nearer to the viewpoint
/// by more than `depth_margin` has its disk pierced by the segment v -> p.
inline std::vector<bool> disk_raycast_visibility(const std::vector<Point3>& pts, const Point3& v,
                                                 double radius = 0.05,
                                                 double depth_margin = 0.25) {
  std::vector<bool> vis(pts.size(), true);
  std::vector<double> dist(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) dist[i] = (pts[i] - v).norm();
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return dist[a] < dist[b]; });
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (dist[i] <= 0.0) continue;
    const Point3 dir = (pts[i] - v) / dist[i];
    for (auto q : order) {
      if (dist[q] >= dist[i] - depth_margin) break;
      // Disk of q lies in the plane through q with normal (q - v).
      const Point3 rq = pts[q] - v;
      const double cosang = rq.dot(dir) / dist[q];
      if (cosang <= 0.0) continue;
      const double t = dist[q] / cosang;
      if (t >= dist[i]) continue;
      const double lateral = (t * dir - rq).norm();
      if (lateral <= radius) {
        vis[i] = false;
        break;
      }
    }
  }
  return vis;
}

/// Least-squares slope through (x, y) pairs.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

}  // namespace oscan::oracle
