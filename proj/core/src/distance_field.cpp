#include "movingout/distance_field.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace movingout {

namespace {

constexpr std::array<Cell, 4> kSteps4{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

double distance_to_rect(Vec2 p, const Rect& r) {
  const double dx = std::max({r.min.x - p.x, 0.0, p.x - r.max.x});
  const double dy = std::max({r.min.y - p.y, 0.0, p.y - r.max.y});
  return std::hypot(dx, dy);
}

}  // namespace

Cell cell_of(Vec2 p) {
  auto idx = [](double v) { return std::clamp(static_cast<int>(std::floor(v * kGridSize)), 0, kGridSize - 1); };
  return {idx(p.x), idx(p.y)};
}

Vec2 cell_center(Cell c) { return {(c.x + 0.5) * kCellSize, (c.y + 0.5) * kCellSize}; }

OccupancyGrid OccupancyGrid::from_arena(const Arena& arena, double clearance) {
  OccupancyGrid g;
  for (int y = 0; y < kGridSize; ++y) {
    for (int x = 0; x < kGridSize; ++x) {
      const Vec2 c = cell_center({x, y});
      bool blocked = false;
      if (clearance > 0.0) {
        blocked = c.x < clearance || c.y < clearance || c.x > 1.0 - clearance || c.y > 1.0 - clearance;
      }
      for (const Rect& w : arena.walls) {
        if (blocked) break;
        blocked = clearance > 0.0 ? distance_to_rect(c, w) < clearance : w.contains(c);
      }
      g.blocked_[index({x, y})] = blocked;
    }
  }
  return g;
}

std::vector<Cell> goal_cells(const Arena& arena, const OccupancyGrid& grid) {
  std::vector<Cell> out;
  for (int y = 0; y < kGridSize; ++y) {
    for (int x = 0; x < kGridSize; ++x) {
      const Cell c{x, y};
      if (grid.blocked(c)) continue;
      const Vec2 p = cell_center(c);
      if (std::any_of(arena.goals.begin(), arena.goals.end(), [&](const Rect& g) { return g.contains(p); })) {
        out.push_back(c);
      }
    }
  }
  return out;
}

DistanceField DistanceField::build(const Arena& arena) {
  const OccupancyGrid grid = OccupancyGrid::from_arena(arena);
  const std::vector<Cell> sources = goal_cells(arena, grid);
  return from_sources(grid, sources);
}

DistanceField DistanceField::from_sources(const OccupancyGrid& grid, std::span<const Cell> sources) {
  DistanceField f;
  std::deque<Cell> queue;
  for (const Cell& s : sources) {
    if (grid.blocked(s)) continue;
    int& d = f.steps_[OccupancyGrid::index(s)];
    if (d == 0) continue;
    d = 0;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    const int next = f.steps_[OccupancyGrid::index(c)] + 1;
    for (const Cell& s : kSteps4) {
      const Cell n{c.x + s.x, c.y + s.y};
      if (grid.blocked(n)) continue;
      int& d = f.steps_[OccupancyGrid::index(n)];
      if (d != kUnreachable) continue;
      d = next;
      queue.push_back(n);
    }
  }
  return f;
}

double DistanceField::at_cell(Cell c) const {
  const int s = steps(c);
  return s == kUnreachable ? std::numeric_limits<double>::infinity() : s * kCellSize;
}

double DistanceField::at(Vec2 p) const {
  const Cell c = cell_of(p);
  if (reachable(c)) return at_cell(c);
  int best = kUnreachable;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const int s = steps({c.x + dx, c.y + dy});
      if (s != kUnreachable && (best == kUnreachable || s < best)) best = s;
    }
  }
  return best == kUnreachable ? std::numeric_limits<double>::infinity() : (best + 1) * kCellSize;
}

std::optional<Cell> DistanceField::descend(Cell c) const {
  const int s = steps(c);
  if (s <= 0) return std::nullopt;
  for (const Cell& d : kSteps4) {
    const Cell n{c.x + d.x, c.y + d.y};
    if (steps(n) == s - 1) return n;
  }
  return std::nullopt;
}

}  // namespace movingout
