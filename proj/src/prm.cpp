#include "scdf/prm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace scdf {

namespace {

using Clock = std::chrono::steady_clock;

std::vector<int> NearestIndices(const std::vector<Config>& points,
                                const Config& q, int count, int exclude) {
  std::vector<std::pair<double, int>> order;
  order.reserve(points.size());
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    if (i != exclude) order.emplace_back((points[i] - q).squaredNorm(), i);
  }
  const int k = std::min<int>(count, static_cast<int>(order.size()));
  std::partial_sort(order.begin(), order.begin() + k, order.end());
  std::vector<int> out;
  for (int i = 0; i < k; ++i) out.push_back(order[i].second);
  return out;
}

std::vector<int> WithinRadius(const std::vector<Config>& points, const Config& q,
                              double radius, int exclude) {
  std::vector<int> out;
  const double r2 = radius * radius;
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    if (i != exclude && (points[i] - q).squaredNorm() <= r2) out.push_back(i);
  }
  return out;
}

void TryConnect(const Scenario& scenario, const std::vector<Config>& vertices,
                Graph* graph, int v, const std::vector<int>& candidates,
                double step) {
  for (int u : candidates) {
    if (graph->HasEdge(u, v)) continue;
    if (SegmentCollisionFree(scenario.robot, scenario.obstacles, vertices[v],
                             vertices[u], step)) {
      graph->AddEdge(u, v, (vertices[u] - vertices[v]).norm());
    }
  }
}

}  // namespace

const char* PrmModeName(PrmMode mode) {
  return mode == PrmMode::kPrm ? "prm" : "prm_star";
}

void PrmParams::Validate() const {
  if (num_vertices < 1) throw std::invalid_argument("num_vertices must be >= 1");
  if (num_neighbors < 1) throw std::invalid_argument("num_neighbors must be >= 1");
  if (!(edge_step > 0.0) || !(validation_step > 0.0)) {
    throw std::invalid_argument("edge check steps must be positive");
  }
  if (!(gamma_factor > 0.0) || measure_samples < 1 || max_resample < 1) {
    throw std::invalid_argument("invalid PRM parameters");
  }
}

double UnitBallVolume(int d) {
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

double PrmStarGamma(int d, double measure_free, double factor) {
  const double inv_d = 1.0 / d;
  return factor * 2.0 * std::pow(1.0 + inv_d, inv_d) *
         std::pow(measure_free / UnitBallVolume(d), inv_d);
}

double PrmStarRadius(int n, int d, double gamma) {
  if (n < 2) throw std::invalid_argument("the PRM* radius needs n >= 2");
  return gamma * std::pow(std::log(static_cast<double>(n)) / n, 1.0 / d);
}

double EstimateFreeMeasure(const Scenario& scenario, int samples,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  int free = 0;
  for (int i = 0; i < samples; ++i) {
    const Config q = SampleUniform(scenario.robot, rng);
    if (!CheckCollision(scenario.robot, q, scenario.obstacles)) ++free;
  }
  return scenario.robot.LimitVolume() * free / samples;
}

PrmRoadmap PrmBuild(const Scenario& scenario, PrmMode mode,
                    const PrmParams& params, std::uint64_t seed) {
  params.Validate();
  PrmRoadmap roadmap;
  roadmap.mode = mode;
  const int d = scenario.robot.dof();
  roadmap.free_measure =
      EstimateFreeMeasure(scenario, params.measure_samples, StreamSeed(seed, 1));
  roadmap.gamma = PrmStarGamma(d, roadmap.free_measure, params.gamma_factor);

  std::mt19937_64 rng(StreamSeed(seed, 0));
  int failures = 0;
  while (static_cast<int>(roadmap.vertices.size()) < params.num_vertices &&
         failures < params.max_resample) {
    const Config q = SampleUniform(scenario.robot, rng);
    if (CheckCollision(scenario.robot, q, scenario.obstacles)) {
      ++failures;
      continue;
    }
    failures = 0;
    roadmap.vertices.push_back(q);
  }
  if (roadmap.vertices.empty()) {
    throw ConstructionFailedError(
        fmt::format("no collision-free sample after {} attempts", params.max_resample));
  }
  const int n = static_cast<int>(roadmap.vertices.size());
  roadmap.graph = Graph(n);
  const double radius = n >= 2 ? PrmStarRadius(n, d, roadmap.gamma) : 0.0;
  for (int v = 0; v < n; ++v) {
    const std::vector<int> candidates =
        mode == PrmMode::kPrm
            ? NearestIndices(roadmap.vertices, roadmap.vertices[v],
                             params.num_neighbors, v)
            : WithinRadius(roadmap.vertices, roadmap.vertices[v], radius, v);
    TryConnect(scenario, roadmap.vertices, &roadmap.graph, v, candidates,
               params.edge_step);
  }
  return roadmap;
}

PrmPlanResult PrmQuery(const PrmRoadmap& roadmap, const Scenario& scenario,
                       const Config& start, const Config& goal,
                       const PrmParams& params, const PrmBudget& budget,
                       std::uint64_t seed) {
  const auto t0 = Clock::now();
  auto elapsed_s = [&t0] {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  };
  PrmPlanResult result;
  const RobotModel& robot = scenario.robot;
  auto finish = [&](PlanStatus status) {
    result.status = status;
    result.time_ms = 1e3 * elapsed_s();
    return result;
  };
  for (const Config* q : {&start, &goal}) {
    if (!robot.WithinLimits(*q) || CheckCollision(robot, *q, scenario.obstacles)) {
      return finish(PlanStatus::kUnreachableQuery);
    }
  }

  // Per-query copies: the roadmap itself stays untouched.
  std::vector<Config> vertices = roadmap.vertices;
  Graph graph = roadmap.graph;
  vertices.push_back(start);
  const int s = graph.AddVertex();
  vertices.push_back(goal);
  const int g = graph.AddVertex();
  for (int v : {s, g}) {
    std::vector<int> candidates =
        NearestIndices(vertices, vertices[v], params.num_neighbors, v);
    TryConnect(scenario, vertices, &graph, v, candidates, params.edge_step);
  }

  auto heuristic = [&](int v) { return (vertices[v] - goal).norm(); };
  if (roadmap.mode == PrmMode::kPrmStar) {
    const int d = robot.dof();
    std::mt19937_64 rng(seed);
    auto within_budget = [&] {
      return budget.sample_budget > 0 ? result.samples_added < budget.sample_budget
                                      : elapsed_s() < budget.time_budget_s;
    };
    while (within_budget()) {
      const Config q = SampleUniform(robot, rng);
      if (CheckCollision(robot, q, scenario.obstacles)) continue;
      vertices.push_back(q);
      const int v = graph.AddVertex();
      const double radius =
          PrmStarRadius(static_cast<int>(vertices.size()), d, roadmap.gamma);
      TryConnect(scenario, vertices, &graph, v,
                 WithinRadius(vertices, q, radius, v), params.edge_step);
      ++result.samples_added;
      if (result.samples_added % budget.checkpoint_every == 0) {
        const SearchResult found = AStar(graph, s, g, heuristic);
        if (found.found) {
          result.checkpoints.push_back({result.samples_added, found.cost});
        }
      }
    }
  }

  bool first_search = true;
  while (true) {
    const SearchResult found = AStar(graph, s, g, heuristic);
    if (!found.found) return finish(PlanStatus::kNoPath);
    if (first_search && roadmap.mode == PrmMode::kPrmStar) {
      // In-graph best at the end of the budget, before fine validation.
      result.checkpoints.push_back({result.samples_added, found.cost});
    }
    first_search = false;
    bool valid = true;
    for (std::size_t i = 0; i + 1 < found.path.size(); ++i) {
      const int a = found.path[i], b = found.path[i + 1];
      if (!SegmentCollisionFree(robot, scenario.obstacles, vertices[a], vertices[b],
                                params.validation_step)) {
        graph.RemoveEdge(a, b);
        ++result.repaired_edges;
        valid = false;
        break;
      }
    }
    if (!valid) continue;
    for (int v : found.path) result.path.push_back(vertices[v]);
    result.length = found.cost;
    break;
  }
  return finish(PlanStatus::kSolved);
}

}  // namespace scdf
