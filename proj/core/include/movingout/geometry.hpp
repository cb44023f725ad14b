#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <variant>
#include <vector>

namespace movingout {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
constexpr Vec2 perp(Vec2 v) { return {-v.y, v.x}; }

inline Vec2 normalized(Vec2 v) {
  const double n = norm(v);
  return n > 0.0 ? v / n : Vec2{1.0, 0.0};
}

/// Rotates `v` by the rotation whose (cos, sin) pair is `rot`.
constexpr Vec2 rotate(Vec2 v, Vec2 rot) {
  return {rot.x * v.x - rot.y * v.y, rot.y * v.x + rot.x * v.y};
}
constexpr Vec2 rotate_inverse(Vec2 v, Vec2 rot) {
  return {rot.x * v.x + rot.y * v.y, -rot.y * v.x + rot.x * v.y};
}

inline Vec2 unit_from_angle(double angle) { return {std::cos(angle), std::sin(angle)}; }

/// Angle in (-pi, pi] of a direction vector.
inline double angle_of(Vec2 dir) {
  const double a = std::atan2(dir.y, dir.x);
  return a <= -std::numbers::pi ? std::numbers::pi : a;
}

inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

/// Axis-aligned rectangle, closed on all sides.
struct Rect {
  Vec2 min;
  Vec2 max;

  constexpr double width() const { return max.x - min.x; }
  constexpr double height() const { return max.y - min.y; }
  constexpr double area() const { return width() * height(); }
  constexpr Vec2 center() const { return {(min.x + max.x) * 0.5, (min.y + max.y) * 0.5}; }
  constexpr bool contains(Vec2 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
  friend constexpr bool operator==(const Rect&, const Rect&) = default;
};

struct Circle {
  Vec2 center;
  double radius = 0.0;
};

/// Convex polygon with counter-clockwise vertices.
struct ConvexPolygon {
  std::vector<Vec2> vertices;
};

using Collider = std::variant<Circle, ConvexPolygon>;

ConvexPolygon to_polygon(const Rect& r);
ConvexPolygon regular_polygon(Vec2 center, double circumradius, int vertex_count, Vec2 rotation);
double polygon_area(const ConvexPolygon& poly);

/// Signed overlap between two shapes. Positive `depth` means penetration;
/// translating the first shape by `normal * depth` separates them.
/// Negative depth is a separation lower bound (exact for circle pairs).
struct Contact {
  double depth = -1.0;
  Vec2 normal{1.0, 0.0};
};

Contact penetration(const Collider& a, const Collider& b);
Contact penetration(const Circle& a, const Circle& b);
Contact penetration(const Circle& a, const ConvexPolygon& b);
Contact penetration(const ConvexPolygon& a, const ConvexPolygon& b);

/// Closest point on the boundary of a collider to `p`.
Vec2 closest_boundary_point(const Collider& shape, Vec2 p);

/// Signed distance from `p` to the collider boundary; negative inside.
double signed_distance(const Collider& shape, Vec2 p);

bool collider_inside_rect(const Collider& shape, const Rect& rect);

void translate(Collider& shape, Vec2 offset);

}  // namespace movingout
