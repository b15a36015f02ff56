// Command-line driver: dataset generation, training, validation, roadmap
// building, planning, benchmarking and the hybrid demo.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "scdf/bench.hpp"
#include "scdf/corridor.hpp"
#include "scdf/distance_field.hpp"
#include "scdf/mlp.hpp"
#include "scdf/oracle.hpp"
#include "scdf/pbrm.hpp"
#include "scdf/scenario.hpp"
#include "scdf/training.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInvalidConfig = 2;
constexpr int kExitPlanningFailed = 3;

class InvalidConfig : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string config_path;
  std::string out_dir = ".";
  bool verbose = false;
};

json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidConfig(path + ": " + e.what());
  }
}

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

fs::path OutPath(const GlobalOptions& g, const std::string& name) {
  const fs::path p(name);
  return p.is_absolute() ? p : fs::path(g.out_dir) / p;
}

scdf::Config ParseConfig(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw InvalidConfig("bad configuration '" + text + "'");
    }
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

// Benchmark config from --config (if any) with the global seed applied.
scdf::BenchmarkConfig LoadBenchConfig(const GlobalOptions& g, bool seed_given) {
  scdf::BenchmarkConfig config;
  if (!g.config_path.empty()) {
    try {
      config = scdf::BenchmarkConfigFromJson(ReadJson(g.config_path));
    } catch (const std::invalid_argument& e) {
      throw InvalidConfig(e.what());
    }
  }
  if (seed_given) config.seed = g.seed;
  return config;
}

int GenData(const GlobalOptions& g, const std::string& system_id, bool self,
            int obstacles, int samples, int resolution, const std::string& out) {
  const scdf::SystemSpec& system = scdf::GetSystem(system_id);
  const int n = resolution > 0 ? resolution : system.resolution;
  scdf::Dataset dataset;
  if (self) {
    dataset = scdf::GenerateSelfDataset(system.robot,
                                        samples > 0 ? samples : system.self_samples, n,
                                        g.seed);
  } else {
    dataset = scdf::GenerateDataset(system.robot, system.sampler,
                                    obstacles > 0 ? obstacles : system.train_obstacles,
                                    samples > 0 ? samples : system.samples_per_obstacle,
                                    n, g.seed);
  }
  scdf::SaveDataset(dataset, OutPath(g, out));
  spdlog::info("wrote {} samples to {}", dataset.samples.size(), OutPath(g, out).string());
  return kExitOk;
}

int Train(const GlobalOptions& g, const std::string& dataset_path,
          scdf::TrainConfig config, const std::string& out,
          const std::string& history) {
  config.seed = g.seed;
  const scdf::Dataset dataset = scdf::LoadDataset(dataset_path);
  const scdf::TrainResult result = scdf::Train(dataset, config);
  scdf::SaveModel(result.model, OutPath(g, out));
  std::string csv = fmt::format("# optimizer={} lr={} batch={} seed={}\nepoch,train_mse,test_mse\n",
                                result.optimizer, config.learning_rate,
                                config.batch_size, config.seed);
  for (const scdf::EpochRecord& e : result.history) {
    csv += fmt::format("{},{},{}\n", e.epoch, e.train_mse, e.test_mse);
  }
  WriteText(OutPath(g, history), csv);
  spdlog::info("best test MSE {:.6g} at epoch {} (target variance {:.6g})",
               result.best_test_mse, result.best_epoch, result.test_target_variance);
  return kExitOk;
}

int Validate(const GlobalOptions& g, const std::string& model_path,
             const std::string& system_id, int geometries, int resolution) {
  const scdf::SystemSpec& system = scdf::GetSystem(system_id);
  const scdf::MlpModel model = scdf::LoadModel(model_path);
  const int n = resolution > 0 ? resolution : system.resolution;
  std::mt19937_64 rng(scdf::StreamSeed(g.seed, 7));
  scdf::ObstacleSet unseen;
  while (static_cast<int>(unseen.size()) < geometries) {
    const scdf::GeometryVector v = system.sampler.Sample(rng);
    if (scdf::BuildGrid(system.robot, v, n).num_boundary() > 0) unseen.push_back(v);
  }
  const scdf::ValidationReport report = scdf::ValidateModel(model, system.robot, unseen, n);
  std::string csv = "geometry,accuracy,recall,precision\n";
  for (std::size_t i = 0; i < report.per_geometry.size(); ++i) {
    const auto& c = report.per_geometry[i].counts;
    csv += fmt::format("{},{:.2f},{:.2f},{:.2f}\n", i, c.accuracy(), c.recall(),
                       c.precision());
  }
  csv += fmt::format("all,{:.2f},{:.2f},{:.2f}\n", report.accuracy(), report.recall(),
                     report.precision());
  WriteText(OutPath(g, "table2.csv"), csv);
  std::cout << fmt::format("{}: accuracy {:.2f}%  recall {:.2f}%  precision {:.2f}%\n",
                           system.id, report.accuracy(), report.recall(),
                           report.precision());
  return kExitOk;
}

std::shared_ptr<const scdf::DistanceField> FieldFor(const scdf::RoadmapFile& file) {
  const scdf::Scenario& scenario = file.scenario;
  if (file.backend.kind == "oracle") {
    return std::make_shared<scdf::OracleField>(scenario.robot, scenario.obstacles,
                                               file.backend.resolution);
  }
  if (file.backend.kind != "nscdf") {
    throw InvalidConfig("unknown backend '" + file.backend.kind + "'");
  }
  auto model = std::make_shared<const scdf::MlpModel>(scdf::LoadModel(file.backend.model_path));
  std::shared_ptr<const scdf::MlpModel> self_model;
  if (!file.backend.self_model_path.empty()) {
    self_model = std::make_shared<const scdf::MlpModel>(
        scdf::LoadModel(file.backend.self_model_path));
  }
  std::shared_ptr<const scdf::DistanceField> field =
      std::make_shared<scdf::NeuralField>(model, scenario.obstacles, self_model);
  if (model->dof() < scenario.robot.dof()) {
    field = std::make_shared<scdf::ProjectedField>(field, scenario.robot.dof());
  }
  return field;
}

int BuildRoadmap(const GlobalOptions& g, bool seed_given, std::string scenario_path,
                 std::string system_id, std::string model_path,
                 std::string self_model_path, std::string backend, int vertices,
                 double margin, const std::string& out) {
  const scdf::BenchmarkConfig config = LoadBenchConfig(g, seed_given);
  if (system_id.empty()) system_id = config.system;
  if (model_path.empty()) model_path = config.model_path;
  if (self_model_path.empty()) self_model_path = config.self_model_path;
  if (backend.empty()) backend = config.backend;
  if (margin < 0.0) margin = config.margin;
  const scdf::SystemSpec& system = scdf::GetSystem(system_id);

  scdf::RoadmapFile file;
  file.seed = config.seed;
  if (!scenario_path.empty()) {
    try {
      file.scenario = scdf::LoadScenario(scenario_path);
    } catch (const std::invalid_argument& e) {
      throw InvalidConfig(e.what());
    }
  } else {
    // First benchmark world for this seed.
    std::mt19937_64 rng(scdf::StreamSeed(config.seed, 1000));
    file.scenario = scdf::SampleWorld(system, rng);
  }
  file.backend.kind = backend;
  file.backend.model_path = model_path.empty() ? "" : fs::absolute(model_path).string();
  file.backend.self_model_path =
      self_model_path.empty() ? "" : fs::absolute(self_model_path).string();
  file.backend.resolution = system.resolution;
  file.backend.margin = margin >= 0.0 ? margin
                                      : scdf::LatticeDiagonal(system.robot, system.resolution);
  file.params.num_vertices = vertices > 0 ? vertices : config.pbrm_vertices;
  file.params.num_neighbors = config.num_neighbors;
  if (backend == "nscdf" && model_path.empty()) throw InvalidConfig("--model is required");

  const scdf::ClearanceModel clearance(FieldFor(file), file.scenario.robot,
                                       file.backend.margin);
  file.roadmap = scdf::BuildRoadmap(clearance, file.params, scdf::StreamSeed(file.seed, 1));
  scdf::SaveRoadmap(file, OutPath(g, out));
  spdlog::info("roadmap with {} vertices and {} edges written to {}",
               file.roadmap.num_vertices(), file.roadmap.edges().size(),
               OutPath(g, out).string());
  return kExitOk;
}

json PathJson(const std::vector<scdf::Config>& path) {
  json j = json::array();
  for (const scdf::Config& q : path) j.push_back(scdf::ConfigToJson(q));
  return j;
}

std::string DenseCsv(const std::vector<scdf::Config>& path, double step) {
  std::string csv;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double length = (path[i + 1] - path[i]).norm();
    const int n = std::max(1, static_cast<int>(std::ceil(length / step)));
    for (int k = 0; k < n; ++k) {
      const scdf::Config q = path[i] + (path[i + 1] - path[i]) * (double(k) / n);
      for (Eigen::Index d = 0; d < q.size(); ++d) {
        csv += fmt::format("{}{}", d ? "," : "", q(d));
      }
      csv += "\n";
    }
  }
  if (!path.empty()) {
    for (Eigen::Index d = 0; d < path.back().size(); ++d) {
      csv += fmt::format("{}{}", d ? "," : "", path.back()(d));
    }
    csv += "\n";
  }
  return csv;
}

int Plan(const GlobalOptions& g, const std::string& roadmap_path,
         const std::string& start_text, const std::string& goal_text, bool hybrid,
         const std::string& out, const std::string& dense) {
  const scdf::RoadmapFile file = scdf::LoadRoadmap(roadmap_path);
  const scdf::Config start = ParseConfig(start_text);
  const scdf::Config goal = ParseConfig(goal_text);
  const int dof = file.scenario.robot.dof();
  if (start.size() != dof || goal.size() != dof) {
    throw InvalidConfig(fmt::format("start and goal need {} joint values", dof));
  }
  const scdf::ClearanceModel clearance(FieldFor(file), file.scenario.robot,
                                       file.backend.margin);
  scdf::PbrmPlanner planner(std::make_shared<const scdf::Roadmap>(file.roadmap),
                            clearance, file.params);
  if (hybrid) planner.EnableHybrid({file.scenario.robot, file.scenario.obstacles});
  const scdf::PlanResult plan = planner.Solve(start, goal);

  json j;
  j["status"] = scdf::PlanStatusName(plan.status);
  if (plan.status != scdf::PlanStatus::kSolved) {
    WriteText(OutPath(g, out), j.dump(2) + "\n");
    std::cerr << "planning failed: " << scdf::PlanStatusName(plan.status) << "\n";
    return kExitPlanningFailed;
  }
  std::vector<scdf::Config> optimized;
  scdf::OptimizedPath opt;
  bool fallback = false;
  try {
    opt = scdf::OptimizeCorridor(plan.corridor);
    optimized = plan.Assemble(opt.waypoints);
  } catch (const scdf::CorridorStalledError& e) {
    optimized = plan.Assemble(e.fallback());
    fallback = true;
  }
  json corridor = json::array();
  for (const scdf::Ball& b : plan.corridor.balls) {
    corridor.push_back({{"center", scdf::ConfigToJson(b.center)}, {"radius", b.radius}});
  }
  j["corridor"] = corridor;
  j["polyline"] = PathJson(plan.polyline);
  j["polyline_length"] = plan.length;
  j["waypoints"] = PathJson(optimized);
  j["segment_lengths"] = opt.SegmentLengths();
  j["length"] = scdf::PathLength(optimized);
  j["residual"] = opt.residual;
  j["iterations"] = opt.iterations;
  j["fallback"] = fallback;
  j["used_hybrid"] = plan.used_hybrid;
  j["collision_free"] = scdf::PathCollisionFree(file.scenario.robot,
                                                file.scenario.obstacles, optimized, 1e-3);
  WriteText(OutPath(g, out), j.dump(2) + "\n");
  if (!dense.empty()) WriteText(OutPath(g, dense), DenseCsv(optimized, 1e-2));
  std::cout << fmt::format("solved: corridor of {} balls, length {:.4f} (centers {:.4f})\n",
                           plan.corridor.size(), scdf::PathLength(optimized), plan.length);
  return kExitOk;
}

int Bench(const GlobalOptions& g, bool seed_given, const std::string& system,
          const std::string& model, const std::string& self_model, int worlds,
          int queries, int sample_budget) {
  scdf::BenchmarkConfig config = LoadBenchConfig(g, seed_given);
  if (!system.empty()) config.system = system;
  if (!model.empty()) config.model_path = model;
  if (!self_model.empty()) config.self_model_path = self_model;
  if (worlds > 0) config.num_worlds = worlds;
  if (queries > 0) config.queries_per_world = queries;
  if (sample_budget > 0) config.prm_star_sample_budget = sample_budget;
  try {
    config.Validate();
  } catch (const std::invalid_argument& e) {
    throw InvalidConfig(e.what());
  }
  const scdf::BenchmarkReport report = scdf::RunBenchmark(config);
  scdf::EmitReport(report, g.out_dir);
  std::ifstream table(fs::path(g.out_dir) / "table1.txt");
  std::cout << table.rdbuf();
  return kExitOk;
}

int HybridDemo(const GlobalOptions& g, const std::string& model_path, double margin,
               int vertices) {
  auto model = std::make_shared<const scdf::MlpModel>(scdf::LoadModel(model_path));
  const scdf::HybridDemo demo = scdf::MakeHybridDemo();
  const scdf::SystemSpec& system = scdf::GetSystem(demo.model_system);
  if (margin < 0.0) margin = scdf::LatticeDiagonal(system.robot, system.resolution);
  const scdf::HybridDemoResult result = scdf::RunHybridDemo(model, margin, vertices, g.seed);
  std::cout << fmt::format(
      "start clearance {:.4f} (model), start free: {}\n"
      "without hybrid: {}\nwith hybrid: {} ({} hybrid edges), path valid: {}\n",
      result.start_clearance, result.start_free,
      scdf::PlanStatusName(result.without_hybrid.status),
      scdf::PlanStatusName(result.with_hybrid.status), result.hybrid_edges,
      result.path_valid);
  json j = {{"start_clearance", result.start_clearance},
            {"start_free", result.start_free},
            {"without_hybrid", scdf::PlanStatusName(result.without_hybrid.status)},
            {"with_hybrid", scdf::PlanStatusName(result.with_hybrid.status)},
            {"hybrid_edges", result.hybrid_edges},
            {"path_valid", result.path_valid},
            {"path", PathJson(result.path)}};
  WriteText(OutPath(g, "hybrid_demo.json"), j.dump(2) + "\n");
  WriteText(OutPath(g, "hybrid_scene.svg"),
            scdf::SceneSvg(demo.scene, {demo.start, demo.goal}));
  return result.path_valid ? kExitOk : kExitPlanningFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural signed configuration distance and bubble-roadmap planning"};
  app.require_subcommand(1);
  GlobalOptions g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--config", g.config_path, "Benchmark config (JSON)");
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");

  std::string system = "sc3", dataset, model, self_model, out, scenario, roadmap;
  std::string backend, start, goal, history = "history.csv", dense;
  bool self = false, hybrid = false;
  int obstacles = 0, samples = 0, resolution = 0, geometries = 10, vertices = 0;
  int worlds = 0, queries = 0, sample_budget = 0;
  double margin = -1.0;
  scdf::TrainConfig train_config;

  auto* gen = app.add_subcommand("gen-data", "Generate a signed-distance dataset");
  gen->add_option("--system", system)->capture_default_str();
  gen->add_flag("--self", self, "Self-collision dataset");
  gen->add_option("--obstacles", obstacles, "Obstacles (default: system setting)");
  gen->add_option("--samples", samples, "Configurations per obstacle");
  gen->add_option("--resolution", resolution, "Grid resolution per joint");
  gen->add_option("--out", out)->required();

  auto* train = app.add_subcommand("train", "Train a distance network");
  train->add_option("--dataset", dataset)->required();
  train->add_option("--epochs", train_config.max_epochs)->capture_default_str();
  train->add_option("--patience", train_config.patience)->capture_default_str();
  train->add_option("--hidden", train_config.hidden)->capture_default_str();
  train->add_option("--lr", train_config.learning_rate)->capture_default_str();
  train->add_option("--lr-patience", train_config.lr_patience,
                    "Epochs without improvement before the rate decays (0: constant)")
      ->capture_default_str();
  train->add_option("--batch", train_config.batch_size)->capture_default_str();
  train->add_option("--out", out)->required();
  train->add_option("--history", history)->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Validate a model on unseen obstacles");
  validate->add_option("--model", model)->required();
  validate->add_option("--system", system)->capture_default_str();
  validate->add_option("--geometries", geometries)->capture_default_str();
  validate->add_option("--resolution", resolution);

  auto* build = app.add_subcommand("build-roadmap", "Build a bubble roadmap");
  build->add_option("--scenario", scenario, "Scenario JSON (default: sampled world)");
  build->add_option("--system", system);
  build->add_option("--model", model);
  build->add_option("--self-model", self_model);
  build->add_option("--backend", backend, "nscdf or oracle");
  build->add_option("--vertices", vertices);
  build->add_option("--margin", margin);
  build->add_option("--out", out)->required();

  auto* plan = app.add_subcommand("plan", "Plan on a saved roadmap");
  plan->add_option("--roadmap", roadmap)->required();
  plan->add_option("--start", start, "Comma-separated joint values")->required();
  plan->add_option("--goal", goal)->required();
  plan->add_flag("--hybrid", hybrid, "Exact-detector fallback for blocked queries");
  plan->add_option("--out", out)->capture_default_str();
  plan->add_option("--dense-csv", dense, "Interpolated path for plotting");

  auto* bench = app.add_subcommand("bench", "Randomized planner benchmark");
  bench->add_option("--system", system);
  bench->add_option("--model", model);
  bench->add_option("--self-model", self_model);
  bench->add_option("--worlds", worlds);
  bench->add_option("--queries", queries);
  bench->add_option("--prm-star-samples", sample_budget,
                    "Fixed PRM* sample budget instead of the time budget");

  auto* demo = app.add_subcommand("hybrid-demo", "Hybrid planning demo");
  demo->add_option("--model", model, "Model of the sc3_tool system")->required();
  demo->add_option("--margin", margin);
  demo->add_option("--vertices", vertices);

  system.clear();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInvalidConfig;
  }
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);
  const bool seed_given = seed_opt->count() > 0;
  const std::string sys = system.empty() ? "sc3" : system;
  if (out.empty()) out = "plan.json";

  try {
    fs::create_directories(g.out_dir);
    if (*gen) return GenData(g, sys, self, obstacles, samples, resolution, out);
    if (*train) return Train(g, dataset, train_config, out, history);
    if (*validate) return Validate(g, model, sys, geometries, resolution);
    if (*build) {
      return BuildRoadmap(g, seed_given, scenario, system, model, self_model, backend,
                          vertices, margin, out);
    }
    if (*plan) return Plan(g, roadmap, start, goal, hybrid, out, dense);
    if (*bench) {
      return Bench(g, seed_given, system, model, self_model, worlds, queries,
                   sample_budget);
    }
    if (*demo) return HybridDemo(g, model, margin, vertices > 0 ? vertices : 250);
  } catch (const InvalidConfig& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
