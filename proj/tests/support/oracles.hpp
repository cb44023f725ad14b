#pragma once

#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "movingout/distance_field.hpp"

namespace oracles {

using movingout::Cell;
using movingout::kGridSize;
using movingout::OccupancyGrid;

// Dijkstra with unit edge weights over the same occupancy grid.
inline std::vector<double> dijkstra(const OccupancyGrid& grid, const std::vector<Cell>& sources) {
  const int n = kGridSize * kGridSize;
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Node = std::pair<double, int>;
  std::priority_queue<Node, std::vector<Node>, std::greater<>> pq;
  for (const Cell& s : sources) {
    dist[s.y * kGridSize + s.x] = 0.0;
    pq.push({0.0, s.y * kGridSize + s.x});
  }
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    const int x = u % kGridSize;
    const int y = u / kGridSize;
    const int nx[4] = {x + 1, x - 1, x, x};
    const int ny[4] = {y, y, y + 1, y - 1};
    for (int k = 0; k < 4; ++k) {
      if (grid.blocked({nx[k], ny[k]})) continue;
      const int v = ny[k] * kGridSize + nx[k];
      if (d + 1.0 < dist[v]) {
        dist[v] = d + 1.0;
        pq.push({dist[v], v});
      }
    }
  }
  return dist;
}

}  // namespace oracles
