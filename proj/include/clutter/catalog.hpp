#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "clutter/geometry.hpp"

namespace clutter {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ObjectClass {
  int id = -1;
  std::string name;
};

// The 10 global orientation labels. Each catalog entry declares the subset it
// supports; an orientation edge in a scene graph names one of these.
//   0 upright            5 on side, -y up
//   1 upside down        6 upright, yawed 45 deg
//   2 on side, +x up     7 on side (+x up), yawed 45 deg
//   3 on side, -x up     8 lying along x
//   4 on side, +y up     9 lying along y
inline constexpr int kOrientationCount = 10;

enum class ShapeKind { Cuboid, Cylinder };

struct ObjectSpec {
  ObjectClass cls;
  ShapeKind shape = ShapeKind::Cuboid;
  double dx = 0.0, dy = 0.0, dz = 0.0;  // cuboid extents (m)
  double radius = 0.0, height = 0.0;    // cylinder (m)
  double mass = 0.1;                    // kg
  std::vector<int> allowed_orientations;

  int default_orientation() const { return allowed_orientations.front(); }
  bool allows(int label) const {
    for (int k : allowed_orientations)
      if (k == label) return true;
    return false;
  }
};

// A meta-object: `count` copies of one class placed side by side with the
// given gap, jointly able to support stacked objects.
struct MetaSpec {
  int id = -1;
  std::string name;
  int member_class = -1;
  int count = 2;
  double spacing = 0.0;  // gap between member footprints (m)
};

struct TraySpec {
  double width = 0.6;        // x extent (m)
  double depth = 0.4;        // y extent (m)
  double wall_height = 0.08;

  Polygon floor_polygon() const { return rect_polygon(0.0, 0.0, width, depth); }
};

// Pose geometry of an object realized under one orientation label:
// footprint polygon centered at the object's XY center, the vertical extent,
// and the rotation taking the canonical body frame to the world frame.
struct OrientedShape {
  Polygon footprint;  // centered at origin
  double height = 0.0;
  Quat rotation;
};

inline constexpr int kCylinderFootprintSides = 16;

inline OrientedShape oriented_shape(const ObjectSpec& spec, int label) {
  constexpr double kQuarter = M_PI / 2.0;
  constexpr double kDiag = M_PI / 4.0;
  OrientedShape out;
  if (spec.shape == ShapeKind::Cuboid) {
    switch (label) {
      case 0:
        out = {rect_polygon(0, 0, spec.dx, spec.dy), spec.dz, Quat{}};
        break;
      case 1:
        out = {rect_polygon(0, 0, spec.dx, spec.dy), spec.dz, Quat::rot_x(M_PI)};
        break;
      case 2:
        out = {rect_polygon(0, 0, spec.dz, spec.dy), spec.dx,
               Quat::rot_y(kQuarter)};
        break;
      case 3:
        out = {rect_polygon(0, 0, spec.dz, spec.dy), spec.dx,
               Quat::rot_y(-kQuarter)};
        break;
      case 4:
        out = {rect_polygon(0, 0, spec.dx, spec.dz), spec.dy,
               Quat::rot_x(-kQuarter)};
        break;
      case 5:
        out = {rect_polygon(0, 0, spec.dx, spec.dz), spec.dy,
               Quat::rot_x(kQuarter)};
        break;
      case 6:
        out = {rect_polygon(0, 0, spec.dx, spec.dy, kDiag), spec.dz,
               Quat::rot_z(kDiag)};
        break;
      case 7:
        out = {rect_polygon(0, 0, spec.dz, spec.dy, kDiag), spec.dx,
               Quat::rot_z(kDiag) * Quat::rot_y(kQuarter)};
        break;
      default:
        throw std::invalid_argument("orientation label " +
                                    std::to_string(label) +
                                    " not defined for cuboids");
    }
  } else {
    switch (label) {
      case 0:
        out = {regular_ngon(0, 0, spec.radius, kCylinderFootprintSides),
               spec.height, Quat{}};
        break;
      case 8:
        out = {rect_polygon(0, 0, spec.height, 2.0 * spec.radius),
               2.0 * spec.radius, Quat::rot_y(kQuarter)};
        break;
      case 9:
        out = {rect_polygon(0, 0, 2.0 * spec.radius, spec.height),
               2.0 * spec.radius, Quat::rot_x(kQuarter)};
        break;
      default:
        throw std::invalid_argument("orientation label " +
                                    std::to_string(label) +
                                    " not defined for cylinders");
    }
  }
  return out;
}

class Catalog {
 public:
  std::vector<ObjectSpec> specs;   // indexed by class id
  std::vector<MetaSpec> metas;     // indexed by meta id
  TraySpec tray;
  std::string name = "catalog";

  int class_count() const { return static_cast<int>(specs.size()); }
  int meta_count() const { return static_cast<int>(metas.size()); }

  const ObjectSpec& spec(int class_id) const {
    if (class_id < 0 || class_id >= class_count())
      throw std::out_of_range("unknown object class id " +
                              std::to_string(class_id));
    return specs[class_id];
  }
  const MetaSpec& meta(int meta_id) const {
    if (meta_id < 0 || meta_id >= meta_count())
      throw std::out_of_range("unknown meta id " + std::to_string(meta_id));
    return metas[meta_id];
  }

  std::optional<int> find_class(const std::string& name) const {
    for (const auto& s : specs)
      if (s.cls.name == name) return s.cls.id;
    return std::nullopt;
  }
  std::optional<int> find_meta(const std::string& name) const {
    for (const auto& m : metas)
      if (m.name == name) return m.id;
    return std::nullopt;
  }

  void validate() const {
    for (int i = 0; i < class_count(); ++i) {
      const ObjectSpec& s = specs[i];
      if (s.cls.id != i) throw ConfigError("catalog: class ids must be dense");
      if (s.allowed_orientations.empty())
        throw ConfigError("catalog: " + s.cls.name +
                          " has no allowed orientations");
      for (int k : s.allowed_orientations) {
        if (k < 0 || k >= kOrientationCount)
          throw ConfigError("catalog: orientation label out of range");
        oriented_shape(s, k);  // throws if the label is shape-incompatible
      }
      const bool dims_ok = s.shape == ShapeKind::Cuboid
                               ? (s.dx > 0 && s.dy > 0 && s.dz > 0)
                               : (s.radius > 0 && s.height > 0);
      if (!dims_ok)
        throw ConfigError("catalog: non-positive dimensions for " + s.cls.name);
      for (int j = 0; j < i; ++j)
        if (specs[j].cls.name == s.cls.name)
          throw ConfigError("catalog: duplicate class name " + s.cls.name);
    }
    for (int i = 0; i < meta_count(); ++i) {
      const MetaSpec& m = metas[i];
      if (m.id != i) throw ConfigError("catalog: meta ids must be dense");
      if (m.member_class < 0 || m.member_class >= class_count())
        throw ConfigError("catalog: meta " + m.name +
                          " references missing class");
      if (m.count < 2) throw ConfigError("catalog: meta count must be >= 2");
    }
    if (tray.width <= 0 || tray.depth <= 0)
      throw ConfigError("catalog: tray dimensions must be positive");
  }
};

inline Catalog load_catalog(const nlohmann::json& j) {
  Catalog cat;
  cat.name = j.value("name", "catalog");
  int id = 0;
  for (const auto& e : j.at("objects")) {
    ObjectSpec s;
    s.cls.id = id++;
    s.cls.name = e.at("name").get<std::string>();
    const std::string shape = e.at("shape").get<std::string>();
    if (shape == "cuboid") {
      s.shape = ShapeKind::Cuboid;
      s.dx = e.at("dx").get<double>();
      s.dy = e.at("dy").get<double>();
      s.dz = e.at("dz").get<double>();
    } else if (shape == "cylinder") {
      s.shape = ShapeKind::Cylinder;
      s.radius = e.at("radius").get<double>();
      s.height = e.at("height").get<double>();
    } else {
      throw ConfigError("catalog: unknown shape " + shape);
    }
    s.mass = e.at("mass").get<double>();
    s.allowed_orientations = e.at("orientations").get<std::vector<int>>();
    cat.specs.push_back(std::move(s));
  }
  int mid = 0;
  for (const auto& e : j.value("metas", nlohmann::json::array())) {
    MetaSpec m;
    m.id = mid++;
    m.name = e.at("name").get<std::string>();
    const std::string member = e.at("member").get<std::string>();
    auto cls = cat.find_class(member);
    if (!cls) throw ConfigError("catalog: meta member class " + member +
                                " not in catalog");
    m.member_class = *cls;
    m.count = e.value("count", 2);
    m.spacing = e.at("spacing").get<double>();
    cat.metas.push_back(std::move(m));
  }
  if (j.contains("tray")) {
    const auto& t = j.at("tray");
    cat.tray.width = t.at("width").get<double>();
    cat.tray.depth = t.at("depth").get<double>();
    cat.tray.wall_height = t.value("wall_height", 0.08);
  }
  cat.validate();
  return cat;
}

inline Catalog load_catalog_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open catalog file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("catalog " + path + ": " + e.what());
  }
  return load_catalog(j);
}

}  // namespace clutter
