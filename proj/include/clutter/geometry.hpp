#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace clutter {

struct Vec2 {
  double x = 0.0, y = 0.0;
  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::sqrt(x * x + y * y); }
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  bool operator==(const Vec3& o) const = default;
};

// Unit quaternion (w, x, y, z).
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;
  bool operator==(const Quat& o) const = default;

  static Quat axis_angle(double ax, double ay, double az, double angle) {
    const double h = 0.5 * angle, s = std::sin(h);
    return {std::cos(h), ax * s, ay * s, az * s};
  }
  static Quat rot_x(double a) { return axis_angle(1, 0, 0, a); }
  static Quat rot_y(double a) { return axis_angle(0, 1, 0, a); }
  static Quat rot_z(double a) { return axis_angle(0, 0, 1, a); }

  Quat operator*(const Quat& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z,
            w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x,
            w * o.z + x * o.y - y * o.x + z * o.w};
  }
  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
};

// Convex polygon in the XY plane, counter-clockwise winding.
using Polygon = std::vector<Vec2>;

inline double polygon_area(const Polygon& p) {
  double a = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2& u = p[i];
    const Vec2& v = p[(i + 1) % p.size()];
    a += u.cross(v);
  }
  return 0.5 * a;
}

inline Vec2 polygon_centroid(const Polygon& p) {
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2& u = p[i];
    const Vec2& v = p[(i + 1) % p.size()];
    const double c = u.cross(v);
    a += c;
    cx += (u.x + v.x) * c;
    cy += (u.y + v.y) * c;
  }
  if (std::abs(a) < 1e-18) return p.empty() ? Vec2{} : p[0];
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

inline Polygon translate(const Polygon& p, Vec2 d) {
  Polygon out = p;
  for (auto& v : out) v = v + d;
  return out;
}

// Axis-aligned rectangle centered at (cx, cy), optionally yawed.
inline Polygon rect_polygon(double cx, double cy, double w, double d,
                            double yaw = 0.0) {
  const double hw = 0.5 * w, hd = 0.5 * d;
  const double c = std::cos(yaw), s = std::sin(yaw);
  std::array<Vec2, 4> local{Vec2{-hw, -hd}, Vec2{hw, -hd}, Vec2{hw, hd},
                            Vec2{-hw, hd}};
  Polygon out;
  out.reserve(4);
  for (const Vec2& v : local)
    out.push_back({cx + c * v.x - s * v.y, cy + s * v.x + c * v.y});
  return out;
}

inline Polygon regular_ngon(double cx, double cy, double radius, int n) {
  Polygon out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * M_PI * i / n;
    out.push_back({cx + radius * std::cos(a), cy + radius * std::sin(a)});
  }
  return out;
}

// Sutherland-Hodgman clip of convex `subject` against convex `clip`.
// Both CCW. Result may be empty.
inline Polygon convex_intersect(const Polygon& subject, const Polygon& clip) {
  Polygon out = subject;
  for (std::size_t i = 0; i < clip.size() && !out.empty(); ++i) {
    const Vec2 a = clip[i];
    const Vec2 b = clip[(i + 1) % clip.size()];
    const Vec2 ab = b - a;
    Polygon in;
    in.swap(out);
    for (std::size_t j = 0; j < in.size(); ++j) {
      const Vec2 p = in[j];
      const Vec2 q = in[(j + 1) % in.size()];
      const double sp = ab.cross(p - a);
      const double sq = ab.cross(q - a);
      if (sp >= 0.0) out.push_back(p);
      if ((sp > 0.0 && sq < 0.0) || (sp < 0.0 && sq > 0.0)) {
        const double t = sp / (sp - sq);
        out.push_back(p + (q - p) * t);
      }
    }
  }
  return out;
}

inline double intersection_area(const Polygon& a, const Polygon& b) {
  const Polygon c = convex_intersect(a, b);
  return c.size() >= 3 ? polygon_area(c) : 0.0;
}

// Andrew monotone chain. Returns CCW hull (no duplicate endpoint).
inline Polygon convex_hull(std::vector<Vec2> pts) {
  if (pts.size() < 3) return pts;
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) {
                          return a.x == b.x && a.y == b.y;
                        }),
            pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && (h[k - 1] - h[k - 2]).cross(pts[i] - h[k - 2]) <= 0) --k;
    h[k++] = pts[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = pts.size() - 1; i-- > 0;) {
    while (k >= lower && (h[k - 1] - h[k - 2]).cross(pts[i] - h[k - 2]) <= 0)
      --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

// Signed distance from a point to the boundary of a CCW convex polygon:
// positive inside, negative outside. Inside value is the exact distance to
// the nearest edge line; outside value is minus the distance to the boundary.
inline double signed_distance(const Polygon& poly, Vec2 p) {
  if (poly.size() < 3) {
    if (poly.empty()) return -1e9;
    double d = 1e9;
    for (std::size_t i = 0; i < poly.size(); ++i)
      d = std::min(d, point_segment_distance(p, poly[i],
                                             poly[(i + 1) % poly.size()]));
    return -d;
  }
  double inside_min = 1e18;
  bool inside = true;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % poly.size()];
    const Vec2 ab = b - a;
    const double len = ab.norm();
    if (len < 1e-15) continue;
    const double s = ab.cross(p - a) / len;  // >0 inside for CCW
    if (s < 0.0) inside = false;
    inside_min = std::min(inside_min, s);
  }
  if (inside) return inside_min;
  double d = 1e18;
  for (std::size_t i = 0; i < poly.size(); ++i)
    d = std::min(d,
                 point_segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
  return -d;
}

inline bool point_in_polygon(const Polygon& poly, Vec2 p) {
  return signed_distance(poly, p) >= 0.0;
}

struct Aabb2 {
  double min_x = 1e18, min_y = 1e18, max_x = -1e18, max_y = -1e18;
  void extend(Vec2 v) {
    min_x = std::min(min_x, v.x);
    min_y = std::min(min_y, v.y);
    max_x = std::max(max_x, v.x);
    max_y = std::max(max_y, v.y);
  }
  double width() const { return max_x - min_x; }
  double depth() const { return max_y - min_y; }
  bool overlaps(const Aabb2& o) const {
    return min_x < o.max_x && o.min_x < max_x && min_y < o.max_y &&
           o.min_y < max_y;
  }
};

inline Aabb2 bounding_box(const Polygon& p) {
  Aabb2 b;
  for (const Vec2& v : p) b.extend(v);
  return b;
}

}  // namespace clutter
