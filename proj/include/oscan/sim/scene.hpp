#pragma once

#include "oscan/core/point_cloud.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

namespace oscan {

using Vec2 = Eigen::Vector2d;

/// Simple polygon in the ground plane, counter-clockwise or clockwise.
struct Polygon2 {
  std::vector<Vec2> vertices;

  bool contains(const Vec2& p) const {
    bool inside = false;
    const auto& v = vertices;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
      if ((v[i].y() > p.y()) != (v[j].y() > p.y()) &&
          p.x() < (v[j].x() - v[i].x()) * (p.y() - v[i].y()) / (v[j].y() - v[i].y()) + v[i].x())
        inside = !inside;
    }
    return inside;
  }

  double area() const {
    double a = 0.0;
    for (std::size_t i = 0, j = vertices.size() - 1; i < vertices.size(); j = i++)
      a += vertices[j].x() * vertices[i].y() - vertices[i].x() * vertices[j].y();
    return std::abs(a) / 2.0;
  }

  /// Distance to the boundary; 0 inside.
  double distance(const Vec2& p) const {
    if (contains(p)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0, j = vertices.size() - 1; i < vertices.size(); j = i++) {
      const Vec2 a = vertices[j], ab = vertices[i] - a;
      const double t = std::clamp((p - a).dot(ab) / std::max(ab.squaredNorm(), 1e-300), 0.0, 1.0);
      best = std::min(best, (a + t * ab - p).norm());
    }
    return best;
  }
};

/// Vertical prism standing on the ground plane.
struct Obstacle {
  Polygon2 footprint;
  double height = 3.0;
};

struct StartPose {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
};

/// Flat walkable ground bounded by a polygon, with extruded obstacles.
struct Scene {
  std::string name;
  Polygon2 ground;
  double ground_z = 0.0;
  std::vector<Obstacle> obstacles;
  StartPose start;
  nlohmann::json params = nlohmann::json::object();  // named parameter overrides

  /// Distance from p (projected) to the nearest obstacle footprint.
  double obstacle_distance(const Vec2& p) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : obstacles) best = std::min(best, o.footprint.distance(p));
    return best;
  }
  double obstacle_distance(const Point3& p) const { return obstacle_distance(Vec2(p.x(), p.y())); }

  bool walkable(const Vec2& p) const {
    if (!ground.contains(p)) return false;
    for (const auto& o : obstacles)
      if (o.footprint.contains(p)) return false;
    return true;
  }

  /// Ground area not covered by obstacles (obstacles assumed disjoint and
  /// inside the ground polygon).
  double walkable_area() const {
    double a = ground.area();
    for (const auto& o : obstacles) a -= o.footprint.area();
    return a;
  }

  Point3 start_point() const { return {start.position.x(), start.position.y(), ground_z}; }

  void bounds(Vec2& lo, Vec2& hi) const {
    lo = hi = ground.vertices.front();
    for (const auto& v : ground.vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  }
};

/// Rectangle of the given thickness centered on segment a–b.
inline Polygon2 wall_polygon(const Vec2& a, const Vec2& b, double thickness) {
  const Vec2 d = (b - a).normalized();
  const Vec2 n(-d.y(), d.x());
  const double h = thickness / 2.0;
  // Extend along the axis so joined walls close their corners.
  const Vec2 a2 = a - h * d, b2 = b + h * d;
  return {{a2 - h * n, b2 - h * n, b2 + h * n, a2 + h * n}};
}

namespace detail {

inline Vec2 to_vec2(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidArgument("scene: expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Polygon2 to_polygon(const nlohmann::json& j) {
  Polygon2 p;
  for (const auto& v : j) p.vertices.push_back(to_vec2(v));
  if (p.vertices.size() < 3) throw InvalidArgument("scene: polygon needs at least 3 vertices");
  return p;
}

}  // namespace detail

/// Scene from its JSON form:
///   { "name", "ground": [[x,y],...], "ground_z",
///     "obstacles": [{"polygon": [[x,y],...], "height"}],
///     "walls": [{"from": [x,y], "to": [x,y], "thickness", "height"}],
///     "start": {"position": [x,y], "heading"}, "params": {...} }
inline Scene scene_from_json(const nlohmann::json& j) {
  Scene s;
  s.name = j.value("name", std::string("scene"));
  if (!j.contains("ground")) throw InvalidArgument("scene: missing ground polygon");
  s.ground = detail::to_polygon(j.at("ground"));
  s.ground_z = j.value("ground_z", 0.0);
  for (const auto& o : j.value("obstacles", nlohmann::json::array()))
    s.obstacles.push_back({detail::to_polygon(o.at("polygon")), o.value("height", 3.0)});
  for (const auto& w : j.value("walls", nlohmann::json::array()))
    s.obstacles.push_back({wall_polygon(detail::to_vec2(w.at("from")), detail::to_vec2(w.at("to")),
                                        w.value("thickness", 0.3)),
                           w.value("height", 3.0)});
  if (j.contains("start")) {
    s.start.position = detail::to_vec2(j["start"].at("position"));
    s.start.heading = j["start"].value("heading", 0.0);
  }
  s.params = j.value("params", nlohmann::json::object());
  for (const auto& o : s.obstacles)
    if (!(o.height > 0.0)) throw InvalidArgument("scene: obstacle height must be positive");
  return s;
}

inline Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scene file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed scene file " + path + ": " + e.what());
  }
  return scene_from_json(j);
}

/// Uniform-grid lookup of obstacle edges for ray casting.
class ObstacleGrid {
 public:
  struct Edge {
    Vec2 a, b;
    double height;
    std::size_t obstacle;
  };

  explicit ObstacleGrid(const Scene& scene, double cell = 1.0) : cell_(cell) {
    for (std::size_t k = 0; k < scene.obstacles.size(); ++k) {
      const auto& v = scene.obstacles[k].footprint.vertices;
      for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        const auto id = static_cast<std::uint32_t>(edges_.size());
        edges_.push_back({v[j], v[i], scene.obstacles[k].height, k});
        const Vec2 lo = v[j].cwiseMin(v[i]), hi = v[j].cwiseMax(v[i]);
        for (auto x = cell_of(lo.x()); x <= cell_of(hi.x()); ++x)
          for (auto y = cell_of(lo.y()); y <= cell_of(hi.y()); ++y) cells_[key(x, y)].push_back(id);
      }
    }
  }

  double cell() const { return cell_; }
  const std::vector<Edge>& edges() const { return edges_; }

  const std::vector<std::uint32_t>* at(std::int64_t x, std::int64_t y) const {
    const auto it = cells_.find(key(x, y));
    return it == cells_.end() ? nullptr : &it->second;
  }
  std::int64_t cell_of(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }

 private:
  static std::uint64_t key(std::int64_t x, std::int64_t y) {
    return (static_cast<std::uint64_t>(x & 0xFFFFFFFF) << 32) | static_cast<std::uint64_t>(y & 0xFFFFFFFF);
  }

  double cell_;
  std::vector<Edge> edges_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

}  // namespace oscan
