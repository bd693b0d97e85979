#pragma once

#include "oscan/core/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace oscan::io {

/// Extra per-vertex scalar written as a PLY float property.
struct ScalarProperty {
  std::string name;
  const std::vector<double>* values;
};

namespace detail {

inline std::string fmt_double(double v) {
  if (!is_set(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline Label parse_label(const std::string& s) {
  if (s == "0" || s == "ground" || s == "Ground") return Label::Ground;
  if (s == "1" || s == "obstacle" || s == "Obstacle") return Label::Obstacle;
  throw InvalidArgument("unknown label '" + s + "'");
}

}  // namespace detail

/// ASCII rows "x y z label" with label 0 = ground, 1 = obstacle.
inline void write_xyz(std::ostream& os, const LabeledPointCloud& cloud) {
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    os << detail::fmt_double(p.x()) << ' ' << detail::fmt_double(p.y()) << ' '
       << detail::fmt_double(p.z()) << ' ' << static_cast<int>(cloud.labels[i]) << '\n';
  }
}

inline LabeledPointCloud read_xyz(std::istream& is) {
  LabeledPointCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double x, y, z;
    std::string label = "0";
    if (!(ss >> x >> y >> z)) throw InvalidArgument("xyz: malformed row " + std::to_string(lineno));
    ss >> label;
    cloud.push_back({x, y, z}, detail::parse_label(label));
  }
  return cloud;
}

inline void write_ply(std::ostream& os, const LabeledPointCloud& cloud,
                      const std::vector<ScalarProperty>& extra = {}) {
  os << "ply\nformat ascii 1.0\n";
  os << "element vertex " << cloud.size() << '\n';
  os << "property float x\nproperty float y\nproperty float z\nproperty int label\n";
  for (const auto& e : extra) os << "property float " << e.name << '\n';
  os << "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    os << detail::fmt_double(p.x()) << ' ' << detail::fmt_double(p.y()) << ' '
       << detail::fmt_double(p.z()) << ' ' << static_cast<int>(cloud.labels[i]);
    for (const auto& e : extra) os << ' ' << detail::fmt_double((*e.values)[i]);
    os << '\n';
  }
}

/// PLY with one scalar field and a blue-to-red color ramp over [0, 1]; unset
/// values are drawn gray.
inline void write_ramp_ply(std::ostream& os, const LabeledPointCloud& cloud,
                           const std::vector<double>& field, const std::string& name) {
  if (field.size() != cloud.size()) throw InvalidArgument("write_ramp_ply: field size mismatch");
  os << "ply\nformat ascii 1.0\n";
  os << "element vertex " << cloud.size() << '\n';
  os << "property float x\nproperty float y\nproperty float z\nproperty int label\n";
  os << "property float " << name << '\n';
  os << "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    const double v = field[i];
    int r = 128, g = 128, b = 128;
    if (is_set(v)) {
      const double t = std::clamp(v, 0.0, 1.0);
      r = static_cast<int>(255 * t);
      g = static_cast<int>(255 * (1.0 - std::abs(2.0 * t - 1.0)));
      b = static_cast<int>(255 * (1.0 - t));
    }
    os << detail::fmt_double(p.x()) << ' ' << detail::fmt_double(p.y()) << ' '
       << detail::fmt_double(p.z()) << ' ' << static_cast<int>(cloud.labels[i]) << ' '
       << detail::fmt_double(v) << ' ' << r << ' ' << g << ' ' << b << '\n';
  }
}

/// Reads ASCII PLY written by write_ply (or any ascii PLY with x, y, z and an
/// optional integer label). Unknown properties are skipped.
inline LabeledPointCloud read_ply(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("ply", 0) != 0) throw InvalidArgument("ply: missing magic");
  std::size_t count = 0;
  std::vector<std::string> props;
  bool in_vertex = false;
  while (std::getline(is, line)) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "ascii") throw InvalidArgument("ply: only ascii format is supported");
    } else if (tok == "element") {
      std::string name;
      ss >> name;
      in_vertex = name == "vertex";
      if (in_vertex) ss >> count;
    } else if (tok == "property" && in_vertex) {
      std::string type, name;
      ss >> type >> name;
      props.push_back(name);
    } else if (tok == "end_header") {
      break;
    }
  }
  auto find = [&](const std::string& n) -> int {
    for (std::size_t i = 0; i < props.size(); ++i)
      if (props[i] == n) return static_cast<int>(i);
    return -1;
  };
  const int ix = find("x"), iy = find("y"), iz = find("z"), il = find("label");
  if (ix < 0 || iy < 0 || iz < 0) throw InvalidArgument("ply: x/y/z properties required");
  LabeledPointCloud cloud;
  cloud.reserve(count);
  std::vector<std::string> vals(props.size());
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(is, line)) throw InvalidArgument("ply: truncated vertex list");
    std::istringstream ss(line);
    for (auto& v : vals) ss >> v;
    const Point3 p(std::stod(vals[ix]), std::stod(vals[iy]), std::stod(vals[iz]));
    cloud.push_back(p, il >= 0 ? detail::parse_label(vals[il]) : Label::Ground);
  }
  return cloud;
}

/// Loads by extension: ".ply" as PLY, anything else as XYZ rows.
inline LabeledPointCloud load_cloud(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open cloud file: " + path);
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".ply") return read_ply(f);
  return read_xyz(f);
}

}  // namespace oscan::io
