#include "navigation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace movingout::nav {

OccupancyGrid inflated_grid(const Arena& arena, double clearance, std::span<const Disc> obstacles) {
  OccupancyGrid grid = OccupancyGrid::from_arena(arena, clearance);
  for (const Disc& d : obstacles) {
    const double r = d.radius + clearance;
    const Cell lo = cell_of(d.center - Vec2{r, r});
    const Cell hi = cell_of(d.center + Vec2{r, r});
    for (int y = lo.y; y <= hi.y; ++y) {
      for (int x = lo.x; x <= hi.x; ++x) {
        if (norm(cell_center({x, y}) - d.center) < r) grid.set_blocked({x, y}, true);
      }
    }
  }
  return grid;
}

std::optional<Cell> nearest_free(const OccupancyGrid& grid, Vec2 p, int max_ring) {
  const Cell c = cell_of(p);
  if (!grid.blocked(c)) return c;
  std::optional<Cell> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int ring = 1; ring <= max_ring; ++ring) {
    for (int dy = -ring; dy <= ring; ++dy) {
      for (int dx = -ring; dx <= ring; ++dx) {
        if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
        const Cell n{c.x + dx, c.y + dy};
        if (grid.blocked(n)) continue;
        const double d = norm(cell_center(n) - p);
        if (d < best_d) {
          best_d = d;
          best = n;
        }
      }
    }
    if (best) return best;
  }
  return std::nullopt;
}

DistanceField field_to(const OccupancyGrid& grid, Vec2 target) {
  const auto c = nearest_free(grid, target);
  if (!c) return DistanceField::from_sources(grid, {});
  const Cell src[] = {*c};
  return DistanceField::from_sources(grid, src);
}

double field_value(const DistanceField& field, Vec2 p, int max_ring) {
  const Cell c = cell_of(p);
  if (field.reachable(c)) return field.at_cell(c);
  double best = std::numeric_limits<double>::infinity();
  for (int dy = -max_ring; dy <= max_ring; ++dy) {
    for (int dx = -max_ring; dx <= max_ring; ++dx) {
      const Cell n{c.x + dx, c.y + dy};
      if (!field.reachable(n)) continue;
      best = std::min(best, field.at_cell(n) + std::max(std::abs(dx), std::abs(dy)) * kCellSize);
    }
  }
  return best;
}

bool line_of_sight(const OccupancyGrid& grid, Vec2 a, Vec2 b) {
  const Cell start = cell_of(a);
  const double len = norm(b - a);
  const int samples = std::max(1, static_cast<int>(std::ceil(len / (0.25 * kCellSize))));
  for (int i = 1; i <= samples; ++i) {
    const Vec2 p = a + (b - a) * (static_cast<double>(i) / samples);
    const Cell c = cell_of(p);
    if (c == start) continue;
    if (grid.blocked(c)) return false;
  }
  return true;
}

Steer steer(const DistanceField& field, const OccupancyGrid& grid, Vec2 from, int lookahead) {
  Steer out;
  Cell c = cell_of(from);
  if (!field.reachable(c)) {
    // Start cell lost to inflation: head for the best reachable neighbour.
    std::optional<Cell> best;
    for (int ring = 1; ring <= 3 && !best; ++ring) {
      for (int dy = -ring; dy <= ring; ++dy) {
        for (int dx = -ring; dx <= ring; ++dx) {
          const Cell n{c.x + dx, c.y + dy};
          if (!field.reachable(n)) continue;
          if (!best || field.steps(n) < field.steps(*best)) best = n;
        }
      }
    }
    if (!best) return out;
    c = *best;
  }
  out.reachable = true;
  if (field.steps(c) == 0) {
    out.at_source = true;
    const Vec2 d = cell_center(c) - from;
    out.direction = norm(d) > 1e-12 ? normalized(d) : Vec2{0.0, 0.0};
    return out;
  }
  Cell aim = c;
  Cell cur = c;
  for (int i = 0; i < lookahead; ++i) {
    const auto next = field.descend(cur);
    if (!next) break;
    cur = *next;
    if (line_of_sight(grid, from, cell_center(cur)) || i == 0) aim = cur;
    else break;
  }
  const Vec2 d = cell_center(aim) - from;
  out.direction = norm(d) > 1e-12 ? normalized(d) : Vec2{0.0, 0.0};
  return out;
}

}  // namespace movingout::nav
