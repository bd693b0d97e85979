#pragma once

#include "oscan/core/spatial_index.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace oscan {

/// Octave ladder ending at a 0.1 m base resolution.
inline constexpr std::array<double, 5> kDefaultLadder{1.6, 0.8, 0.4, 0.2, 0.1};

namespace detail {

inline std::uint64_t box_key(const Point3& p, const Point3& origin, double eps) {
  auto c = [&](int a) {
    return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor((p[a] - origin[a]) / eps)) &
                                      0x1FFFFF);
  };
  return (c(0) << 42) | (c(1) << 21) | c(2);
}

inline std::size_t count_unique(std::vector<std::uint64_t>& keys) {
  std::sort(keys.begin(), keys.end());
  return static_cast<std::size_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

inline Point3 min_corner(std::span<const Point3> pts) {
  Point3 lo = pts.front();
  for (const auto& p : pts) lo = lo.cwiseMin(p);
  return lo;
}

}  // namespace detail

/// Number of ε-cells, anchored at the set's minimum corner, holding a point.
inline std::size_t box_count(std::span<const Point3> points, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("box_count: epsilon must be positive");
  if (points.empty()) return 0;
  const Point3 origin = detail::min_corner(points);
  std::vector<std::uint64_t> keys;
  keys.reserve(points.size());
  for (const auto& p : points) keys.push_back(detail::box_key(p, origin, epsilon));
  return detail::count_unique(keys);
}

/// (log(1/ε), log C) pairs over a strictly decreasing ladder.
struct BoxCountSeries {
  std::vector<double> epsilons;
  std::vector<std::size_t> counts;
  std::vector<double> log_inv_eps;
  std::vector<double> log_count;

  /// Least-squares slope of log C against log(1/ε).
  double slope() const {
    const double n = static_cast<double>(log_inv_eps.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < log_inv_eps.size(); ++i) {
      mx += log_inv_eps[i];
      my += log_count[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < log_inv_eps.size(); ++i) {
      sxy += (log_inv_eps[i] - mx) * (log_count[i] - my);
      sxx += (log_inv_eps[i] - mx) * (log_inv_eps[i] - mx);
    }
    return sxx > 0 ? sxy / sxx : 0.0;
  }
};

inline void check_ladder(std::span<const double> epsilons) {
  if (epsilons.size() < 3) throw InvalidArgument("box counting needs at least 3 ladder values");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) throw InvalidArgument("ladder values must be positive");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1]))
      throw InvalidArgument("ladder must be strictly decreasing");
  }
}

namespace detail {

/// Octave shifts of each ladder value relative to the finest, or empty when
/// some ratio is not a power of two.
inline std::vector<int> octave_shifts(std::span<const double> epsilons) {
  std::vector<int> shifts;
  const double finest = epsilons.back();
  for (double e : epsilons) {
    const double m = std::log2(e / finest);
    const double r = std::round(m);
    if (std::abs(m - r) > 1e-9 || r > 20) return {};
    shifts.push_back(static_cast<int>(r));
  }
  return shifts;
}

}  // namespace detail

inline BoxCountSeries box_count_series(std::span<const Point3> points,
                                       std::span<const double> epsilons) {
  check_ladder(epsilons);
  if (points.empty()) throw EmptyInputError("box_count_series: empty point set");
  BoxCountSeries s;
  auto record = [&](double eps, std::size_t c) {
    s.epsilons.push_back(eps);
    s.counts.push_back(c);
    s.log_inv_eps.push_back(std::log(1.0 / eps));
    s.log_count.push_back(std::log(static_cast<double>(c)));
  };
  const Point3 origin = detail::min_corner(points);
  const auto shifts = detail::octave_shifts(epsilons);
  if (!shifts.empty()) {
    // Octave ladder: coarser cells are integer halvings of the finest ones,
    // so only the distinct finest cells need to be visited per level.
    const double finest = epsilons.back();
    std::vector<std::array<std::int64_t, 3>> cells;
    cells.reserve(points.size());
    for (const auto& p : points)
      cells.push_back({static_cast<std::int64_t>(std::floor((p.x() - origin.x()) / finest)),
                       static_cast<std::int64_t>(std::floor((p.y() - origin.y()) / finest)),
                       static_cast<std::int64_t>(std::floor((p.z() - origin.z()) / finest))});
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    std::vector<std::uint64_t> keys(cells.size());
    for (std::size_t l = 0; l < epsilons.size(); ++l) {
      const int sh = shifts[l];
      for (std::size_t i = 0; i < cells.size(); ++i)
        keys[i] = (static_cast<std::uint64_t>(cells[i][0] >> sh) << 42) |
                  (static_cast<std::uint64_t>(cells[i][1] >> sh) << 21) |
                  static_cast<std::uint64_t>(cells[i][2] >> sh);
      std::vector<std::uint64_t> work = keys;
      record(epsilons[l], detail::count_unique(work));
    }
    return s;
  }
  std::vector<std::uint64_t> keys(points.size());
  for (double eps : epsilons) {
    for (std::size_t i = 0; i < points.size(); ++i)
      keys[i] = detail::box_key(points[i], origin, eps);
    record(eps, detail::count_unique(keys));
  }
  return s;
}

/// Box-counting dimension: least-squares slope over the ladder, clamped at 0.
inline double fractal_dimension(std::span<const Point3> points,
                                std::span<const double> epsilons = kDefaultLadder) {
  return std::max(0.0, box_count_series(points, epsilons).slope());
}

struct QualityParams {
  double half_width = 1.6;  // neighborhood is the cube [p − h, p + h]
  std::size_t min_points = 8;
  double under_scanned_below = 1.9;
  std::vector<double> ladder{kDefaultLadder.begin(), kDefaultLadder.end()};
};

inline bool is_under_scanned(double d, const QualityParams& params = {}) {
  return is_set(d) && d < params.under_scanned_below;
}

/// Local box-counting dimension at `probes` over the cube neighborhood drawn
/// from `index`. Neighborhoods with fewer than `min_points` give unset.
inline std::vector<double> local_dimension(const SpatialIndex& index,
                                           std::span<const Point3> probes,
                                           const QualityParams& params = {}) {
  check_ladder(params.ladder);
  const double h = params.half_width;
  std::vector<double> out(probes.size(), kUnset);
  std::vector<Point3> nb;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const Point3& p = probes[k];
    nb.clear();
    index.for_each_in_radius(p, h * std::sqrt(3.0), [&](std::size_t j, double) {
      const Point3& q = index.point(j);
      if ((q - p).cwiseAbs().maxCoeff() <= h) nb.push_back(q);
    });
    if (nb.size() < params.min_points) continue;
    out[k] = fractal_dimension(nb, params.ladder);
  }
  return out;
}

/// Per-point local dimension over the whole cloud (both labels), stored in
/// `cloud.fractal_dim` and returned.
inline std::vector<double> local_quality_field(LabeledPointCloud& cloud,
                                               const QualityParams& params = {}) {
  if (cloud.empty()) return {};
  const SpatialIndex index(cloud.points, std::max(0.5, params.half_width));
  auto d = local_dimension(index, cloud.points, params);
  cloud.fractal_dim = d;
  return d;
}

}  // namespace oscan
