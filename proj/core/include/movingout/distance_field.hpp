#pragma once

#include <array>
#include <span>
#include <vector>

#include "movingout/physics.hpp"

namespace movingout {

inline constexpr int kGridSize = 48;
inline constexpr double kCellSize = 1.0 / kGridSize;

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

Cell cell_of(Vec2 p);
Vec2 cell_center(Cell c);
inline bool in_grid(Cell c) { return c.x >= 0 && c.y >= 0 && c.x < kGridSize && c.y < kGridSize; }

/// 48x48 rasterization of the arena. A cell is blocked when its center lies
/// inside a wall, or within `clearance` of a wall or the arena edge.
class OccupancyGrid {
 public:
  static OccupancyGrid from_arena(const Arena& arena, double clearance = 0.0);

  bool blocked(Cell c) const { return !in_grid(c) || blocked_[index(c)]; }
  void set_blocked(Cell c, bool value) { blocked_[index(c)] = value; }

  static std::size_t index(Cell c) { return static_cast<std::size_t>(c.y * kGridSize + c.x); }

 private:
  std::array<bool, kGridSize * kGridSize> blocked_{};
};

/// Grid distance (4-connected BFS) to a set of source cells, in arena units.
class DistanceField {
 public:
  static constexpr int kUnreachable = -1;

  /// Multi-source BFS from every goal-region cell over non-wall cells.
  static DistanceField build(const Arena& arena);
  static DistanceField from_sources(const OccupancyGrid& grid, std::span<const Cell> sources);

  /// Cell steps to the nearest source, or kUnreachable.
  int steps(Cell c) const { return in_grid(c) ? steps_[OccupancyGrid::index(c)] : kUnreachable; }
  bool reachable(Cell c) const { return steps(c) != kUnreachable; }
  /// Distance in arena units; +inf when unreachable.
  double at_cell(Cell c) const;
  /// Distance at a point. A point whose own cell is unreachable (e.g. a body
  /// center over a wall-rasterized cell) takes the best 8-neighbour plus one
  /// cell; +inf if none is reachable.
  double at(Vec2 p) const;
  /// Neighbouring cell one step closer to the sources, if any.
  std::optional<Cell> descend(Cell c) const;

  const std::vector<int>& raw() const { return steps_; }

 private:
  std::vector<int> steps_ = std::vector<int>(kGridSize * kGridSize, kUnreachable);
};

/// Goal-region cells (centers inside a goal rectangle and not blocked).
std::vector<Cell> goal_cells(const Arena& arena, const OccupancyGrid& grid);

}  // namespace movingout
