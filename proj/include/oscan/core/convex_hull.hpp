#pragma once

#include "oscan/core/point_cloud.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <vector>

namespace oscan {

namespace detail {

/// Andrew's monotone chain on 2D coordinates. Returns indices of strictly
/// extreme points (collinear boundary points dropped).
inline std::vector<std::size_t> hull_2d(const std::vector<Eigen::Vector2d>& pts,
                                        const std::vector<std::size_t>& ids, double eps) {
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pts[a].x() != pts[b].x()) return pts[a].x() < pts[b].x();
    return pts[a].y() < pts[b].y();
  });
  auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
    const Eigen::Vector2d u = pts[a] - pts[o], v = pts[b] - pts[o];
    return u.x() * v.y() - u.y() * v.x();
  };
  std::vector<std::size_t> h(2 * order.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], order[i]) <= eps) --k;
    h[k++] = order[i];
  }
  for (std::size_t i = order.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], order[i]) <= eps) --k;
    h[k++] = order[i];
  }
  h.resize(k > 1 ? k - 1 : k);
  std::vector<std::size_t> out;
  for (auto i : h) out.push_back(ids[i]);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

class QuickHull3 {
 public:
  QuickHull3(const std::vector<Point3>& pts, double eps) : p_(pts), eps_(eps) {}

  /// Returns false when the input is degenerate (no proper tetrahedron).
  bool run(const std::array<std::size_t, 4>& simplex) {
    init(simplex);
    for (std::size_t fi = 0; fi < faces_.size(); ++fi) {
      while (faces_[fi].alive && !faces_[fi].outside.empty()) add_point(fi);
    }
    return true;
  }

  std::vector<std::size_t> vertices() const {
    std::vector<char> mark(p_.size(), 0);
    for (const auto& f : faces_)
      if (f.alive)
        for (int v : f.v) mark[v] = 1;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < mark.size(); ++i)
      if (mark[i]) out.push_back(i);
    return out;
  }

  std::vector<std::array<int, 3>> triangles() const {
    std::vector<std::array<int, 3>> out;
    for (const auto& f : faces_)
      if (f.alive) out.push_back(f.v);
    return out;
  }

 private:
  struct Face {
    std::array<int, 3> v{};
    std::array<int, 3> nb{-1, -1, -1};  // nb[i] is across edge v[i] -> v[i+1]
    Point3 n = Point3::Zero();
    bool alive = true;
    int mark = 0;
    std::vector<int> outside;
  };

  double dist(const Face& f, int i) const { return f.n.dot(p_[i] - p_[f.v[0]]); }

  void set_plane(Face& f) const {
    Point3 n = (p_[f.v[1]] - p_[f.v[0]]).cross(p_[f.v[2]] - p_[f.v[0]]);
    const double len = n.norm();
    f.n = len > 0.0 ? Point3(n / len) : Point3::Zero();
  }

  int make_face(int a, int b, int c) {
    Face f;
    f.v = {a, b, c};
    set_plane(f);
    faces_.push_back(std::move(f));
    return static_cast<int>(faces_.size()) - 1;
  }

  void init(const std::array<std::size_t, 4>& s) {
    int a = static_cast<int>(s[0]), b = static_cast<int>(s[1]);
    int c = static_cast<int>(s[2]), d = static_cast<int>(s[3]);
    const Point3 nrm = (p_[b] - p_[a]).cross(p_[c] - p_[a]);
    if (nrm.dot(p_[d] - p_[a]) > 0) std::swap(b, c);  // d must lie below abc
    // Faces oriented outward.
    const int f0 = make_face(a, b, c);
    const int f1 = make_face(a, d, b);
    const int f2 = make_face(b, d, c);
    const int f3 = make_face(c, d, a);
    link(f0, 0, f1, 2);  // a-b
    link(f0, 1, f2, 2);  // b-c
    link(f0, 2, f3, 2);  // c-a
    link(f1, 1, f2, 0);  // d-b
    link(f2, 1, f3, 0);  // d-c
    link(f3, 1, f1, 0);  // d-a
    for (int i = 0; i < static_cast<int>(p_.size()); ++i) {
      if (i == a || i == b || i == c || i == d) continue;
      assign(i, std::array<int, 4>{f0, f1, f2, f3});
    }
  }

  void link(int f, int e, int g, int h) {
    faces_[f].nb[e] = g;
    faces_[g].nb[h] = f;
  }

  template <typename Range>
  void assign(int i, const Range& candidates) {
    int best = -1;
    double best_d = eps_;
    for (int f : candidates) {
      const double d = dist(faces_[f], i);
      if (d > best_d) {
        best_d = d;
        best = f;
      }
    }
    if (best >= 0) faces_[best].outside.push_back(i);
  }

  void add_point(std::size_t fi) {
    auto& seed = faces_[fi];
    int eye = seed.outside.front();
    double far = dist(seed, eye);
    for (int i : seed.outside) {
      const double d = dist(seed, i);
      if (d > far) {
        far = d;
        eye = i;
      }
    }

    ++stamp_;
    std::vector<int> visible;
    std::vector<int> stack{static_cast<int>(fi)};
    faces_[fi].mark = stamp_;
    while (!stack.empty()) {
      const int f = stack.back();
      stack.pop_back();
      visible.push_back(f);
      for (int g : faces_[f].nb) {
        if (faces_[g].mark == stamp_) continue;
        if (dist(faces_[g], eye) > eps_) {
          faces_[g].mark = stamp_;
          stack.push_back(g);
        }
      }
    }

    // Horizon edges must form one simple cycle. Tolerance can leave pinches
    // or holes; absorb offending neighbors until it does.
    std::vector<std::array<int, 4>> horizon;  // {from, to, outside face, edge}
    for (int guard = 0; guard < 64; ++guard) {
      horizon.clear();
      for (int f : visible)
        for (int e = 0; e < 3; ++e) {
          const int g = faces_[f].nb[e];
          if (faces_[g].mark != stamp_)
            horizon.push_back({faces_[f].v[e], faces_[f].v[(e + 1) % 3], g, edge_of(g, f)});
        }
      std::unordered_map<int, int> starts;
      bool ok = true;
      for (const auto& h : horizon)
        if (++starts[h[0]] > 1) ok = false;
      if (ok && simple_cycle(horizon)) break;
      std::unordered_map<int, int> pinched;
      for (const auto& [v, cnt] : starts)
        if (cnt > 1) pinched[v] = 1;
      bool grew = false;
      for (const auto& h : horizon) {
        if (!pinched.empty() && !pinched.count(h[0]) && !pinched.count(h[1])) continue;
        if (faces_[h[2]].mark != stamp_) {
          faces_[h[2]].mark = stamp_;
          visible.push_back(h[2]);
          grew = true;
        }
      }
      if (!grew) {
        // Cycle broken without pinch: absorb every neighbor once.
        for (const auto& h : horizon)
          if (faces_[h[2]].mark != stamp_) {
            faces_[h[2]].mark = stamp_;
            visible.push_back(h[2]);
          }
      }
    }

    std::vector<int> orphans;
    for (int f : visible) {
      faces_[f].alive = false;
      for (int i : faces_[f].outside)
        if (i != eye) orphans.push_back(i);
      faces_[f].outside.clear();
      faces_[f].outside.shrink_to_fit();
    }

    std::unordered_map<int, int> by_start, by_end;
    std::vector<int> created;
    created.reserve(horizon.size());
    for (const auto& h : horizon) {
      const int nf = make_face(h[0], h[1], eye);
      faces_[nf].nb[0] = h[2];
      faces_[h[2]].nb[h[3]] = nf;
      by_start[h[0]] = nf;
      by_end[h[1]] = nf;
      created.push_back(nf);
    }
    for (int nf : created) {
      auto& f = faces_[nf];
      // edge 1: b -> eye, shared with the face whose horizon edge starts at b
      f.nb[1] = by_start.at(f.v[1]);
      // edge 2: eye -> a, shared with the face whose horizon edge ends at a
      f.nb[2] = by_end.at(f.v[0]);
    }
    for (int i : orphans) assign(i, created);
  }

  int edge_of(int g, int f) const {
    for (int e = 0; e < 3; ++e)
      if (faces_[g].nb[e] == f) return e;
    return -1;
  }

  static bool simple_cycle(const std::vector<std::array<int, 4>>& horizon) {
    if (horizon.size() < 3) return false;
    std::unordered_map<int, int> next;
    for (const auto& h : horizon) next[h[0]] = h[1];
    int v = horizon.front()[0];
    for (std::size_t i = 0; i < horizon.size(); ++i) {
      auto it = next.find(v);
      if (it == next.end()) return false;
      v = it->second;
    }
    if (v != horizon.front()[0]) return false;
    // Every vertex visited exactly once.
    std::unordered_map<int, int> seen;
    v = horizon.front()[0];
    for (std::size_t i = 0; i < horizon.size(); ++i) {
      if (seen[v]++) return false;
      v = next[v];
    }
    return true;
  }

  const std::vector<Point3>& p_;
  double eps_;
  int stamp_ = 0;
  std::vector<Face> faces_;
};

}  // namespace detail

/// Indices (ascending) of the extreme points of a 3D point set.
///
/// Affinely degenerate inputs fall back to a lower-dimensional hull: coplanar
/// sets (within 1e-9 m) use a 2D hull in their plane, collinear sets return the
/// two end points. Fewer than four points are all reported.
inline std::vector<std::size_t> convex_hull_3d(std::span<const Point3> input,
                                               double coplanar_tol = 1e-9) {
  const std::size_t n = input.size();
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  if (n < 4) return all;

  std::vector<Point3> pts(input.begin(), input.end());
  double scale = 0.0;
  for (const auto& p : pts) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double eps = std::max(coplanar_tol, 1e-12 * scale);

  // Two farthest axis extremes.
  std::array<std::size_t, 6> ext{};
  for (int a = 0; a < 3; ++a) {
    for (std::size_t i = 0; i < n; ++i) {
      if (pts[i][a] < pts[ext[2 * a]][a]) ext[2 * a] = i;
      if (pts[i][a] > pts[ext[2 * a + 1]][a]) ext[2 * a + 1] = i;
    }
  }
  std::size_t i0 = 0, i1 = 0;
  double best = -1.0;
  for (auto a : ext)
    for (auto b : ext) {
      const double d = (pts[a] - pts[b]).squaredNorm();
      if (d > best) {
        best = d;
        i0 = a;
        i1 = b;
      }
    }
  if (best <= eps * eps) return {0};  // all points coincide

  const Point3 dir = (pts[i1] - pts[i0]).normalized();
  std::size_t i2 = i0;
  best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (pts[i] - pts[i0]).cross(dir).norm();
    if (d > best) {
      best = d;
      i2 = i;
    }
  }
  if (best <= eps) {
    std::vector<std::size_t> ends{std::min(i0, i1), std::max(i0, i1)};
    return ends;
  }

  const Point3 nrm = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
  std::size_t i3 = i0;
  best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::abs(nrm.dot(pts[i] - pts[i0]));
    if (d > best) {
      best = d;
      i3 = i;
    }
  }
  if (best <= eps) {
    const Point3 u = dir;
    const Point3 v = nrm.cross(u);
    std::vector<Eigen::Vector2d> flat;
    flat.reserve(n);
    for (const auto& p : pts) flat.emplace_back(u.dot(p - pts[i0]), v.dot(p - pts[i0]));
    return detail::hull_2d(flat, all, eps * eps);
  }

  detail::QuickHull3 qh(pts, eps);
  qh.run({i0, i1, i2, i3});
  return qh.vertices();
}

}  // namespace oscan
