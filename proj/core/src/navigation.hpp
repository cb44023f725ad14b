#pragma once

// Grid navigation used by the scripted policies. Not installed.

#include <optional>
#include <span>
#include <vector>

#include "movingout/distance_field.hpp"

namespace movingout::nav {

struct Disc {
  Vec2 center;
  double radius = 0.0;
};

/// Walls and arena edges inflated by `clearance`, plus discs inflated by it.
OccupancyGrid inflated_grid(const Arena& arena, double clearance, std::span<const Disc> obstacles);

/// Nearest free cell to `p`, searching rings up to `max_ring` cells out.
std::optional<Cell> nearest_free(const OccupancyGrid& grid, Vec2 p, int max_ring = 3);

/// BFS field with a single source at the free cell nearest `target`.
DistanceField field_to(const OccupancyGrid& grid, Vec2 target);

/// Field lookup at `p`, falling back to the nearest reachable cell within a
/// few rings (plus the ring distance). Infinity if nothing is reachable.
double field_value(const DistanceField& field, Vec2 p, int max_ring = 3);

struct Steer {
  Vec2 direction{1.0, 0.0};
  bool reachable = false;
  /// True once the path has reached the field's source cell.
  bool at_source = false;
};

/// True when every cell on the segment a-b, other than a's own, is free.
bool line_of_sight(const OccupancyGrid& grid, Vec2 a, Vec2 b);

/// Direction from `from` toward the sources of `field`, aiming at the farthest
/// cell along the descent path that is in straight line of sight.
Steer steer(const DistanceField& field, const OccupancyGrid& grid, Vec2 from, int lookahead = 5);

}  // namespace movingout::nav
