#pragma once

#include <cstdint>
#include <vector>

#include "scdf/graph.hpp"
#include "scdf/pbrm.hpp"
#include "scdf/scenario.hpp"

namespace scdf {

enum class PrmMode { kPrm, kPrmStar };
const char* PrmModeName(PrmMode mode);

struct PrmParams {
  int num_vertices = 500;
  // k for k-nearest-neighbor connection (build in PRM mode, and queries).
  int num_neighbors = 10;
  // Resolution of edge checks during build and densification.
  double edge_step = 1e-2;
  // Resolution of the final check of a returned path.
  double validation_step = 1e-3;
  // Multiple of the theoretical lower bound on the PRM* constant.
  double gamma_factor = 2.0;
  int measure_samples = 10000;
  // Consecutive colliding samples before the build gives up.
  int max_resample = 10000;

  void Validate() const;
};

struct PrmRoadmap {
  PrmMode mode = PrmMode::kPrm;
  std::vector<Config> vertices;
  Graph graph;
  // Monte-Carlo estimate of the free-space measure and the PRM* constant.
  double free_measure = 0.0;
  double gamma = 0.0;
};

// Volume of the unit ball in R^d.
double UnitBallVolume(int d);
// factor * 2 (1 + 1/d)^(1/d) (measure_free / zeta_d)^(1/d).
double PrmStarGamma(int d, double measure_free, double factor = 2.0);
// gamma (log n / n)^(1/d); throws std::invalid_argument for n < 2.
double PrmStarRadius(int n, int d, double gamma);
// Fraction of the joint-limit box that is collision-free, times its volume.
double EstimateFreeMeasure(const Scenario& scenario, int samples,
                           std::uint64_t seed);

// Collision-free uniform samples connected by exact edge checks: k nearest
// neighbors (PRM) or every vertex within r(n) (PRM*). Throws
// ConstructionFailedError when no free sample is found.
PrmRoadmap PrmBuild(const Scenario& scenario, PrmMode mode,
                    const PrmParams& params, std::uint64_t seed);

// PRM* densification budget. A positive sample_budget replaces the wall-clock
// budget with a fixed number of added samples (reproducible runs).
struct PrmBudget {
  double time_budget_s = 1.0;
  int sample_budget = 0;
  // Best length is recorded every this many added samples.
  int checkpoint_every = 100;
};

struct PrmCheckpoint {
  int samples = 0;
  double best_length = 0.0;
};

struct PrmPlanResult {
  PlanStatus status = PlanStatus::kNoPath;
  std::vector<Config> path;
  double length = 0.0;
  double time_ms = 0.0;
  int samples_added = 0;
  // Edges rejected by the final fine-resolution check.
  int repaired_edges = 0;
  std::vector<PrmCheckpoint> checkpoints;
};

// Connects both endpoints to their k nearest vertices, densifies (PRM* only)
// in a per-query copy of the graph, searches with A*, and checks the path at
// validation_step; edges that fail are removed and the search repeated.
PrmPlanResult PrmQuery(const PrmRoadmap& roadmap, const Scenario& scenario,
                       const Config& start, const Config& goal,
                       const PrmParams& params, const PrmBudget& budget,
                       std::uint64_t seed);

}  // namespace scdf
