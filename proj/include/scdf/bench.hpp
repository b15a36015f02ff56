#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "scdf/corridor.hpp"
#include "scdf/mlp.hpp"
#include "scdf/oracle.hpp"
#include "scdf/pbrm.hpp"
#include "scdf/prm.hpp"
#include "scdf/scenario.hpp"
#include "scdf/training.hpp"

namespace scdf {

// A robot together with the obstacle family its worlds and datasets use.
struct SystemSpec {
  std::string id;
  std::string description;
  RobotModel robot;
  ObstacleSampler sampler;
  int obstacles_per_world = 10;
  // Lattice resolution for datasets and the grid oracle.
  int resolution = 64;
  int train_obstacles = 256;
  int samples_per_obstacle = 512;
  int hidden = 128;
  // Self-collision network (robots with non-adjacent link pairs).
  int self_samples = 0;
  int self_hidden = 32;
};

// "sc3", "sc4", "mr", "wd", plus "sc3_tool" (the sc3 arm with a bounding
// circle for a third link, used by the hybrid demo).
const SystemSpec& GetSystem(const std::string& id);
std::vector<std::string> SystemIds();

struct BenchmarkConfig {
  std::string system = "sc3";
  int num_worlds = 10;
  int queries_per_world = 10;
  int pbrm_vertices = 250;
  int baseline_vertices = 500;
  int num_neighbors = 10;
  double prm_star_time_budget_s = 1.0;
  // Positive: PRM* adds exactly this many samples per query instead of
  // running for prm_star_time_budget_s.
  int prm_star_sample_budget = 0;
  std::uint64_t seed = 0;
  // "nscdf" or "oracle".
  std::string backend = "nscdf";
  std::string model_path;
  std::string self_model_path;
  // Negative: one lattice diagonal at the system resolution.
  double margin = -1.0;
  // Unseen geometries for the validation table (0 disables it).
  int validation_geometries = 10;
  // PBRM falls back on the exact detector for query points whose clearance
  // (after the margin) is not positive.
  bool hybrid = true;

  void Validate() const;
};

nlohmann::json BenchmarkConfigToJson(const BenchmarkConfig& config);
// Unknown keys and invalid values throw std::invalid_argument.
BenchmarkConfig BenchmarkConfigFromJson(const nlohmann::json& j);

// Length of one lattice cell diagonal for `robot` at `resolution`.
double LatticeDiagonal(const RobotModel& robot, int resolution);

// Samples obstacles_per_world geometry vectors, redrawing the whole world
// until at least min_free_fraction of uniform configurations are free.
Scenario SampleWorld(const SystemSpec& system, std::mt19937_64& rng,
                     double min_free_fraction = 0.05, int measure_samples = 2000);

// Free-space connectivity on a lattice: component label per free cell.
class FreeSpaceComponents {
 public:
  FreeSpaceComponents(const Scenario& scenario, int resolution);
  // Component of the lattice point nearest q, or -1 when that point is
  // occupied.
  int Label(const Config& q) const;

 private:
  RobotModel robot_;
  int resolution_;
  // Component per lattice point, -1 for occupied points.
  std::vector<int> labels_;
};

// Both endpoints free, the straight segment between them colliding (checked
// at `step`), and, when `components` is given, both endpoints in the same
// free-space component. Throws QuerySamplingFailedError after max_tries.
std::pair<Config, Config> SampleQuery(const Scenario& scenario,
                                      std::mt19937_64& rng,
                                      const FreeSpaceComponents* components = nullptr,
                                      int max_tries = 20000, double step = 1e-3);

inline const std::vector<std::string>& PlannerNames() {
  static const std::vector<std::string> names = {"PBRM", "PBRM*", "PRM", "PRM*"};
  return names;
}

struct QueryRecord {
  int world = 0;
  int query = 0;
  std::string planner;
  // What the planner returned. A returned path only counts as solved when it
  // also passes validation (see solved()).
  PlanStatus status = PlanStatus::kNoPath;
  double time_ms = 0.0;
  double length = 0.0;
  // Exact-detector check of the returned path at 1e-3 rad.
  bool collision_free = false;
  int corridor_size = 0;
  // Corridor optimizer residual; -1 when it fell back to the center path.
  double residual = 0.0;
  bool used_hybrid = false;
  bool fallback = false;

  bool solved() const { return status == PlanStatus::kSolved && collision_free; }
};

struct PlannerSummary {
  std::string planner;
  int attempted = 0;
  // Paths returned by the planner, and those that failed validation.
  int returned = 0;
  int colliding = 0;
  // Returned and collision-free.
  int solved = 0;
  // Over solved queries only.
  double mean_time_ms = 0.0;
  double mean_length = 0.0;

  double success_rate() const { return attempted ? double(solved) / attempted : 0.0; }
  double collision_rate() const { return returned ? double(colliding) / returned : 0.0; }
};

struct WorldRecord {
  int index = 0;
  std::uint64_t seed = 0;
  std::string scenario_hash;
  int roadmap_vertices = 0;
  int roadmap_edges = 0;
  int queries = 0;
  int pbrm_solved = 0;
  double pbrm_build_ms = 0.0;
  double prm_build_ms = 0.0;
  double prm_star_build_ms = 0.0;
};

struct BenchmarkReport {
  BenchmarkConfig config;
  double margin = 0.0;
  std::vector<WorldRecord> worlds;
  std::vector<QueryRecord> records;
  std::optional<ValidationReport> validation;
  // Material for the configuration-space plot of the first world.
  Scenario first_world;
  std::vector<Ball> first_roadmap;
  std::optional<PlanResult> first_plan;
  std::vector<Config> first_optimized;

  // Aggregates recomputed from the per-query records, in PlannerNames() order.
  std::vector<PlannerSummary> Summaries() const;
};

// Runs PBRM, PBRM* (corridor-optimized), PRM and PRM* on every world and
// query. Per-query failures are recorded and never abort the sweep.
BenchmarkReport RunBenchmark(const BenchmarkConfig& config);

// Writes into `dir`:
//   report.json  per-query records and aggregates without timings
//   timings.csv  per-query and mean wall-clock times
//   table1.csv / table1.txt  planner x system time/length table
//   table2.csv   validation metrics (when available)
//   scene.svg / cspace.svg  first world, and its roadmap and path for 2-DOF
// report.json depends only on the seeds when PRM* runs on a sample budget.
void EmitReport(const BenchmarkReport& report, const std::filesystem::path& dir);

// A 3-DOF arm whose distance field comes from a model of the first two links
// plus a bounding circle for the third. At the start pose the bounding circle
// overlaps an obstacle while the real links are free.
struct HybridDemo {
  Scenario scene;
  // System whose model bounds the leading joints ("sc3_tool").
  std::string model_system;
  Config start;
  Config goal;
};
HybridDemo MakeHybridDemo();

struct HybridDemoResult {
  // Conservative (model) clearance radius at the start.
  double start_clearance = 0.0;
  bool start_free = false;
  PlanResult with_hybrid;
  PlanResult without_hybrid;
  // Exact-checked, query to query, through the optimized corridor.
  std::vector<Config> path;
  bool path_valid = false;
  std::size_t hybrid_edges = 0;
  Roadmap roadmap;
};

// Builds a roadmap in the 3-DOF space with the lifted model field and solves
// the demo query with and without the hybrid fallback.
HybridDemoResult RunHybridDemo(std::shared_ptr<const MlpModel> model, double margin,
                               int num_vertices, std::uint64_t seed);

// Workspace drawing of the robot at the given configurations.
std::string SceneSvg(const Scenario& scenario, const std::vector<Config>& poses);
// Configuration-space drawing of a 2-DOF scenario.
std::string CSpaceSvg(const Scenario& scenario, const std::vector<Ball>& balls,
                      const std::vector<Ball>& corridor,
                      const std::vector<Config>& polyline,
                      const std::vector<Config>& optimized, int resolution = 128);

}  // namespace scdf
