#pragma once

#include "oscan/core/point_cloud.hpp"
#include "oscan/core/polyline.hpp"
#include "oscan/sim/scene.hpp"

#include <cstdio>
#include <ostream>
#include <vector>

namespace oscan {

/// Ground-truth walkable raster of a scene and the IoU of scanned ground
/// against it. A cell is walkable when its centre lies on the ground, outside
/// every obstacle and at least `margin` from all of them. Cells that straddle
/// the margin (centre within half a cell diagonal inside it) are ignored:
/// scanned ground there neither counts as coverage nor as a false positive.
class CoverageMask {
 public:
  CoverageMask(const Scene& scene, double cell = 0.5, double margin = 1.0) : cell_(cell) {
    if (!(cell > 0.0)) throw InvalidArgument("coverage: cell must be positive");
    scene.bounds(lo_, hi_);
    nx_ = static_cast<std::size_t>(std::ceil((hi_.x() - lo_.x()) / cell)) + 1;
    ny_ = static_cast<std::size_t>(std::ceil((hi_.y() - lo_.y()) / cell)) + 1;
    truth_.assign(nx_ * ny_, 0);
    for (std::size_t ix = 0; ix < nx_; ++ix)
      for (std::size_t iy = 0; iy < ny_; ++iy) {
        const Vec2 c = lo_ + Vec2((ix + 0.5) * cell, (iy + 0.5) * cell);
        if (!scene.walkable(c)) continue;
        const double d = scene.obstacle_distance(c);
        if (d >= margin) {
          truth_[ix * ny_ + iy] = kTruth;
          ++truth_count_;
        } else if (d > margin - cell * std::sqrt(0.5)) {
          truth_[ix * ny_ + iy] = kIgnored;
        }
      }
  }

  double cell() const { return cell_; }
  std::size_t truth_cells() const { return truth_count_; }
  bool is_truth(std::size_t ix, std::size_t iy) const { return truth_[ix * ny_ + iy] == kTruth; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }

  /// |scanned ∩ truth| / |scanned ∪ truth| over ground points of `cloud`.
  double iou(const LabeledPointCloud& cloud) const {
    std::vector<std::uint8_t> hit(truth_.size(), 0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (!cloud.is_ground(i)) continue;
      const auto& p = cloud.points[i];
      const double fx = std::floor((p.x() - lo_.x()) / cell_), fy = std::floor((p.y() - lo_.y()) / cell_);
      if (fx < 0 || fy < 0 || fx >= static_cast<double>(nx_) || fy >= static_cast<double>(ny_))
        continue;
      hit[static_cast<std::size_t>(fx) * ny_ + static_cast<std::size_t>(fy)] = 1;
    }
    std::size_t inter = 0, uni = 0;
    for (std::size_t k = 0; k < hit.size(); ++k) {
      const bool t = truth_[k] == kTruth;
      inter += hit[k] && t;
      uni += t || (hit[k] && truth_[k] == kVoid);
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }

 private:
  static constexpr std::uint8_t kVoid = 0, kTruth = 1, kIgnored = 2;

  double cell_;
  Vec2 lo_, hi_;
  std::size_t nx_ = 0, ny_ = 0;
  std::vector<std::uint8_t> truth_;
  std::size_t truth_count_ = 0;
};

inline double coverage_iou(const LabeledPointCloud& cloud, const Scene& scene, double cell = 0.5,
                           double margin = 1.0) {
  if (cloud.empty()) return 0.0;
  return CoverageMask(scene, cell, margin).iou(cloud);
}

struct CurvePoint {
  double traveled;
  double iou;
  bool removal;  // ground was deleted near new obstacles during this step
};

struct MetricsReport {
  std::vector<CurvePoint> curve;
  double final_iou = 0.0;
  double travel = 0.0;
  double curvature = 0.0;  // accumulated turning of the executed path, radians
  std::vector<double> step_seconds;

  /// Travel at which the curve first reaches `iou`; infinity if never.
  double travel_to(double iou) const {
    for (const auto& c : curve)
      if (c.iou >= iou) return c.traveled;
    return std::numeric_limits<double>::infinity();
  }
};

inline void write_curve_csv(std::ostream& os, const MetricsReport& m) {
  os << "traveled,iou,removal\n";
  char buf[96];
  for (const auto& c : m.curve) {
    std::snprintf(buf, sizeof(buf), "%.4f,%.5f,%d\n", c.traveled, c.iou, c.removal ? 1 : 0);
    os << buf;
  }
}

}  // namespace oscan
