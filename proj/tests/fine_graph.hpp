#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "scdf/corridor.hpp"

namespace scdf::testing {

// Shortest start-goal path through a planar ball chain over a fine graph of
// about `nodes` lattice points. Waypoint k ranges over a lattice laid over the
// bounding box of the intersection of balls k and k + 1, so consecutive
// waypoints share a ball and every edge stays inside the chain. The layers
// form a DAG that is solved by dynamic programming.
inline double FineGraphLength(const Corridor& c, int nodes) {
  const std::size_t n = c.size();
  if (n == 1) return (c.goal - c.start).norm();
  const int per_axis = static_cast<int>(std::sqrt(double(nodes) / double(n - 1)));
  if (per_axis < 2) throw std::invalid_argument("too few nodes for the corridor");
  std::vector<std::vector<Config>> layers(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const Ball& a = c.balls[k];
    const Ball& b = c.balls[k + 1];
    const Eigen::Vector2d lo = (a.center.head<2>().array() - a.radius)
                                   .max(b.center.head<2>().array() - b.radius);
    const Eigen::Vector2d hi = (a.center.head<2>().array() + a.radius)
                                   .min(b.center.head<2>().array() + b.radius);
    const Eigen::Vector2d h = (hi - lo) / (per_axis - 1);
    for (int i = 0; i < per_axis; ++i) {
      for (int j = 0; j < per_axis; ++j) {
        Config p(2);
        p << lo.x() + i * h.x(), lo.y() + j * h.y();
        if (a.Contains(p) && b.Contains(p)) layers[k].push_back(p);
      }
    }
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<Config> previous = {c.start};
  std::vector<double> cost = {0.0};
  for (const std::vector<Config>& layer : layers) {
    if (layer.empty()) throw std::runtime_error("an intersection holds no lattice point");
    std::vector<double> next(layer.size(), kInf);
    for (std::size_t a = 0; a < previous.size(); ++a) {
      for (std::size_t b = 0; b < layer.size(); ++b) {
        next[b] = std::min(next[b], cost[a] + (layer[b] - previous[a]).norm());
      }
    }
    previous = layer;
    cost = std::move(next);
  }
  double best = kInf;
  for (std::size_t a = 0; a < previous.size(); ++a) {
    best = std::min(best, cost[a] + (c.goal - previous[a]).norm());
  }
  return best;
}

}  // namespace scdf::testing
