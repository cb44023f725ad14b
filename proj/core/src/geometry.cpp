#include "movingout/geometry.hpp"

#include <algorithm>
#include <limits>

namespace movingout {

ConvexPolygon to_polygon(const Rect& r) {
  return ConvexPolygon{{r.min, {r.max.x, r.min.y}, r.max, {r.min.x, r.max.y}}};
}

ConvexPolygon regular_polygon(Vec2 center, double circumradius, int vertex_count, Vec2 rotation) {
  ConvexPolygon poly;
  poly.vertices.reserve(static_cast<std::size_t>(vertex_count));
  for (int k = 0; k < vertex_count; ++k) {
    const double a = 2.0 * std::numbers::pi * k / vertex_count;
    const Vec2 local{circumradius * std::cos(a), circumradius * std::sin(a)};
    poly.vertices.push_back(center + rotate(local, rotation));
  }
  return poly;
}

double polygon_area(const ConvexPolygon& poly) {
  double twice = 0.0;
  const auto& v = poly.vertices;
  for (std::size_t i = 0; i < v.size(); ++i) twice += cross(v[i], v[(i + 1) % v.size()]);
  return 0.5 * twice;
}

namespace {

struct Interval {
  double lo;
  double hi;
};

Interval project(const ConvexPolygon& p, Vec2 axis) {
  Interval out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Vec2& v : p.vertices) {
    const double s = dot(v, axis);
    out.lo = std::min(out.lo, s);
    out.hi = std::max(out.hi, s);
  }
  return out;
}

Interval project(const Circle& c, Vec2 axis) {
  const double s = dot(c.center, axis);
  return {s - c.radius, s + c.radius};
}

// Updates `best` with the overlap of `a` and `b` along `axis`, choosing the
// direction that pushes `a` out of `b` with the smaller translation.
void test_axis(Interval a, Interval b, Vec2 axis, Contact& best) {
  const double push_pos = b.hi - a.lo;
  const double push_neg = a.hi - b.lo;
  const double overlap = std::min(push_pos, push_neg);
  if (overlap < best.depth) {
    best.depth = overlap;
    best.normal = push_pos < push_neg ? axis : -axis;
  }
}

Vec2 closest_on_segment(Vec2 a, Vec2 b, Vec2 p) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 <= 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return a + ab * t;
}

Vec2 edge_normal(Vec2 a, Vec2 b) {
  const Vec2 e = b - a;
  return normalized(Vec2{e.y, -e.x});
}

}  // namespace

Contact penetration(const Circle& a, const Circle& b) {
  const Vec2 d = a.center - b.center;
  const double dist = norm(d);
  Contact c;
  c.depth = a.radius + b.radius - dist;
  c.normal = dist > 0.0 ? d / dist : Vec2{1.0, 0.0};
  return c;
}

Contact penetration(const Circle& a, const ConvexPolygon& b) {
  Contact best{std::numeric_limits<double>::infinity(), {1.0, 0.0}};
  const auto& v = b.vertices;
  double closest_d2 = std::numeric_limits<double>::infinity();
  Vec2 closest_vertex = v.front();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 n = edge_normal(v[i], v[(i + 1) % v.size()]);
    test_axis(project(a, n), project(b, n), n, best);
    const Vec2 dv = a.center - v[i];
    const double d2 = dot(dv, dv);
    if (d2 < closest_d2) {
      closest_d2 = d2;
      closest_vertex = v[i];
    }
  }
  if (closest_d2 > 0.0) {
    const Vec2 n = normalized(a.center - closest_vertex);
    test_axis(project(a, n), project(b, n), n, best);
  }
  return best;
}

Contact penetration(const ConvexPolygon& a, const ConvexPolygon& b) {
  Contact best{std::numeric_limits<double>::infinity(), {1.0, 0.0}};
  for (const ConvexPolygon* p : {&a, &b}) {
    const auto& v = p->vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Vec2 n = edge_normal(v[i], v[(i + 1) % v.size()]);
      test_axis(project(a, n), project(b, n), n, best);
    }
  }
  return best;
}

Contact penetration(const Collider& a, const Collider& b) {
  return std::visit(
      [](const auto& x, const auto& y) -> Contact {
        using X = std::decay_t<decltype(x)>;
        using Y = std::decay_t<decltype(y)>;
        if constexpr (std::is_same_v<X, ConvexPolygon> && std::is_same_v<Y, Circle>) {
          Contact c = penetration(y, x);
          c.normal = -c.normal;
          return c;
        } else {
          return penetration(x, y);
        }
      },
      a, b);
}

Vec2 closest_boundary_point(const Collider& shape, Vec2 p) {
  if (const auto* c = std::get_if<Circle>(&shape)) {
    return c->center + normalized(p - c->center) * c->radius;
  }
  const auto& v = std::get<ConvexPolygon>(shape).vertices;
  Vec2 best = v.front();
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 q = closest_on_segment(v[i], v[(i + 1) % v.size()], p);
    const Vec2 d = p - q;
    const double d2 = dot(d, d);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = q;
    }
  }
  return best;
}

double signed_distance(const Collider& shape, Vec2 p) {
  if (const auto* c = std::get_if<Circle>(&shape)) return norm(p - c->center) - c->radius;
  const auto& poly = std::get<ConvexPolygon>(shape);
  const double d = norm(p - closest_boundary_point(shape, p));
  const auto& v = poly.vertices;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (cross(v[(i + 1) % v.size()] - v[i], p - v[i]) < 0.0) return d;
  }
  return -d;
}

bool collider_inside_rect(const Collider& shape, const Rect& rect) {
  if (const auto* c = std::get_if<Circle>(&shape)) {
    return c->center.x - c->radius >= rect.min.x && c->center.x + c->radius <= rect.max.x &&
           c->center.y - c->radius >= rect.min.y && c->center.y + c->radius <= rect.max.y;
  }
  const auto& v = std::get<ConvexPolygon>(shape).vertices;
  return std::all_of(v.begin(), v.end(), [&](Vec2 p) { return rect.contains(p); });
}

void translate(Collider& shape, Vec2 offset) {
  std::visit(
      [&](auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Circle>) {
          s.center += offset;
        } else {
          for (Vec2& v : s.vertices) v += offset;
        }
      },
      shape);
}

}  // namespace movingout
