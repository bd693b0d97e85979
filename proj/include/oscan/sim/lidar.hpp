#pragma once

#include "oscan/planner/world_map.hpp"
#include "oscan/sim/scene.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace oscan {

/// Spinning multi-ring range sensor.
struct LidarModel {
  double max_range = 50.0;
  double min_elevation_deg = -15.0;
  double max_elevation_deg = 15.0;
  int rings = 40;
  double azimuth_step_deg = 0.4;
  double noise_sigma = 0.02;  // Gaussian range noise, clipped at 4σ
  double sensor_height = 0.8;

  void validate() const {
    if (rings < 1 || !(azimuth_step_deg > 0.0) || !(max_range > 0.0))
      throw InvalidArgument("LidarModel: rings, azimuth step and range must be positive");
    if (!(noise_sigma >= 0.0)) throw InvalidArgument("LidarModel: noise sigma must be >= 0");
    if (max_elevation_deg < min_elevation_deg)
      throw InvalidArgument("LidarModel: elevation band is inverted");
  }

  int azimuth_count() const { return static_cast<int>(std::lround(360.0 / azimuth_step_deg)); }

  double elevation(int ring) const {
    if (rings == 1) return min_elevation_deg * M_PI / 180.0;
    const double t = static_cast<double>(ring) / (rings - 1);
    return (min_elevation_deg + t * (max_elevation_deg - min_elevation_deg)) * M_PI / 180.0;
  }
};

inline constexpr double kNoiseClip = 4.0;

/// Ray caster bound to one scene. Returns are ordered by (ring, azimuth).
class LidarSimulator {
 public:
  LidarSimulator(const Scene& scene, LidarModel model)
      : scene_(scene), model_(model), grid_(scene) {
    model_.validate();
  }

  const LidarModel& model() const { return model_; }

  /// One 360° sweep from a robot standing at `robot` (on the ground).
  /// Noise depends only on (seed, scan_index).
  ScanBatch scan(const Point3& robot, std::uint64_t seed, int scan_index) const {
    const Vec2 at(robot.x(), robot.y());
    if (!scene_.ground.contains(at)) throw InvalidArgument("simulate_scan: robot outside the scene");
    ScanBatch batch;
    batch.origin = Point3(robot.x(), robot.y(), scene_.ground_z + model_.sensor_height);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(scan_index)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, 1.0);

    const int na = model_.azimuth_count();
    std::vector<double> ca(na), sa(na);
    for (int j = 0; j < na; ++j) {
      const double a = j * model_.azimuth_step_deg * M_PI / 180.0;
      ca[j] = std::cos(a);
      sa[j] = std::sin(a);
    }
    for (int r = 0; r < model_.rings; ++r) {
      const double e = model_.elevation(r);
      const double ce = std::cos(e), se = std::sin(e);
      for (int j = 0; j < na; ++j) {
        const Point3 dir(ce * ca[j], ce * sa[j], se);
        const auto hit = cast(batch.origin, Vec2(ca[j], sa[j]), ce, se);
        if (!hit) continue;
        double range = hit->range;
        if (model_.noise_sigma > 0.0)
          range += model_.noise_sigma * std::clamp(noise(rng), -kNoiseClip, kNoiseClip);
        batch.points.push_back(batch.origin + range * dir);
        batch.labels.push_back(hit->label);
      }
    }
    return batch;
  }

 private:
  struct Hit {
    double range;
    Label label;
  };

  std::optional<Hit> cast(const Point3& o, const Vec2& u, double ce, double se) const {
    std::optional<Hit> best;
    // Horizontal reach before the ray leaves range or meets the ground.
    double reach = model_.max_range * ce;
    const double lift = o.z() - scene_.ground_z;
    if (se < 0.0) {
      const double ground_range = lift / -se;
      if (ground_range <= model_.max_range) {
        const double s = ground_range * ce;
        const Vec2 g(o.x() + s * u.x(), o.y() + s * u.y());
        if (scene_.ground.contains(g)) best = Hit{ground_range, Label::Ground};
        reach = std::min(reach, s);
      }
    }
    if (ce < 1e-12) return best;
    if (const auto s = first_wall(Vec2(o.x(), o.y()), u, reach, o.z(), se / ce)) {
      best = Hit{*s / ce, Label::Obstacle};
    }
    return best;
  }

  /// Horizontal distance to the first obstacle face the ray meets below its
  /// top, walking the edge grid cell by cell.
  std::optional<double> first_wall(const Vec2& o, const Vec2& u, double reach, double z0,
                                   double slope) const {
    const double c = grid_.cell();
    std::int64_t cx = grid_.cell_of(o.x()), cy = grid_.cell_of(o.y());
    const int step_x = u.x() > 0 ? 1 : -1, step_y = u.y() > 0 ? 1 : -1;
    const double inf = std::numeric_limits<double>::infinity();
    const double dx = std::abs(u.x()) > 1e-15 ? c / std::abs(u.x()) : inf;
    const double dy = std::abs(u.y()) > 1e-15 ? c / std::abs(u.y()) : inf;
    double tx = std::abs(u.x()) > 1e-15
                    ? ((u.x() > 0 ? (cx + 1) * c - o.x() : o.x() - cx * c) / std::abs(u.x()))
                    : inf;
    double ty = std::abs(u.y()) > 1e-15
                    ? ((u.y() > 0 ? (cy + 1) * c - o.y() : o.y() - cy * c) / std::abs(u.y()))
                    : inf;
    std::optional<double> best;
    double entered = 0.0;
    while (entered <= reach) {
      if (const auto* ids = grid_.at(cx, cy)) {
        for (auto id : *ids) {
          const auto& e = grid_.edges()[id];
          const Vec2 ab = e.b - e.a, ao = e.a - o;
          const double den = u.x() * ab.y() - u.y() * ab.x();
          if (std::abs(den) < 1e-15) continue;
          const double s = (ao.x() * ab.y() - ao.y() * ab.x()) / den;
          const double t = (ao.x() * u.y() - ao.y() * u.x()) / den;
          if (s <= 1e-9 || s > reach || t < 0.0 || t > 1.0) continue;
          const double z = z0 + s * slope;
          if (z < scene_.ground_z || z > scene_.ground_z + e.height) continue;
          if (!best || s < *best) best = s;
        }
      }
      const double exit = std::min(tx, ty);
      if (best && *best <= exit) return best;
      entered = exit;
      if (tx < ty) {
        tx += dx;
        cx += step_x;
      } else {
        ty += dy;
        cy += step_y;
      }
    }
    return best;
  }

  const Scene& scene_;
  LidarModel model_;
  ObstacleGrid grid_;
};

/// Single sweep without keeping a simulator around.
inline ScanBatch simulate_scan(const Scene& scene, const Point3& robot, const LidarModel& lidar,
                               std::uint64_t seed, int scan_index = 0) {
  return LidarSimulator(scene, lidar).scan(robot, seed, scan_index);
}

}  // namespace oscan
