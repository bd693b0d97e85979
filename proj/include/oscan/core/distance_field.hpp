#pragma once

#include "oscan/core/point_cloud.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace oscan {

namespace detail {

/// Squared distance transform of a sampled function along one axis
/// (lower envelope of parabolas).
inline void edt_1d(const double* f, int n, double* d, int* v, double* z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  auto meet = [&](int q, int p) {
    return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
  };
  for (int q = 1; q < n; ++q) {
    double s = meet(q, v[k]);
    while (s <= z[k]) s = meet(q, v[--k]);
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace detail

/// Horizontal distance to the nearest seed over a square raster, exact
/// between cell centers. Queries resolve to the center of their cell, so the
/// result is within one cell diagonal of the true point-to-seed distance.
class PlanarDistanceField {
 public:
  PlanarDistanceField(const Point3& center, double half_extent, double cell,
                      std::span<const Point3> seeds)
      : cell_(cell) {
    if (!(cell > 0.0) || !(half_extent > 0.0))
      throw InvalidArgument("PlanarDistanceField: extent and cell must be positive");
    n_ = static_cast<int>(std::ceil(2.0 * half_extent / cell));
    x0_ = center.x() - half_extent;
    y0_ = center.y() - half_extent;
    constexpr double big = 1e20;
    sq_.assign(static_cast<std::size_t>(n_) * n_, big);
    for (const auto& s : seeds) {
      const int i = cell_x(s.x()), j = cell_y(s.y());
      if (i < 0 || j < 0 || i >= n_ || j >= n_) continue;
      sq_[idx(i, j)] = 0.0;
      has_seed_ = true;
    }
    if (!has_seed_) return;
    std::vector<double> f(n_), d(n_), z(n_ + 1);
    std::vector<int> v(n_);
    for (int j = 0; j < n_; ++j) {
      for (int i = 0; i < n_; ++i) f[i] = sq_[idx(i, j)];
      detail::edt_1d(f.data(), n_, d.data(), v.data(), z.data());
      for (int i = 0; i < n_; ++i) sq_[idx(i, j)] = d[i];
    }
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) f[j] = sq_[idx(i, j)];
      detail::edt_1d(f.data(), n_, d.data(), v.data(), z.data());
      for (int j = 0; j < n_; ++j) sq_[idx(i, j)] = d[j];
    }
  }

  bool empty() const { return !has_seed_; }
  double cell() const { return cell_; }

  /// Infinity when there are no seeds or q is outside the raster.
  double distance(const Point3& q) const {
    const int i = cell_x(q.x()), j = cell_y(q.y());
    if (!has_seed_ || i < 0 || j < 0 || i >= n_ || j >= n_)
      return std::numeric_limits<double>::infinity();
    return std::sqrt(sq_[idx(i, j)]) * cell_;
  }

 private:
  int cell_x(double x) const { return static_cast<int>(std::floor((x - x0_) / cell_)); }
  int cell_y(double y) const { return static_cast<int>(std::floor((y - y0_) / cell_)); }
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * n_ + i; }

  double cell_;
  int n_ = 0;
  double x0_ = 0, y0_ = 0;
  bool has_seed_ = false;
  std::vector<double> sq_;
};

}  // namespace oscan
