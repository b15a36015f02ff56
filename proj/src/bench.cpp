#include "scdf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <queue>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace scdf {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;
constexpr double kPi = std::numbers::pi;
constexpr double kValidationStep = 1e-3;

double MillisecondsSince(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

RobotModel Arm(std::vector<double> lengths, std::vector<JointLimit> limits,
               double tool_radius = 0.0) {
  RobotModel robot;
  robot.link_lengths = std::move(lengths);
  robot.link_radius = 0.05;
  robot.joint_limits = std::move(limits);
  robot.tool_radius = tool_radius;
  return robot;
}

std::map<std::string, SystemSpec> MakeSystems() {
  std::map<std::string, SystemSpec> systems;
  ObstacleSampler circles;
  circles.kind = ShapeKind::kCircle;
  circles.center_low = Vec2(-2.0, -2.0);
  circles.center_high = Vec2(2.0, 2.0);
  circles.size_low = 0.1;
  circles.size_high = 0.3;

  SystemSpec sc3;
  sc3.id = "sc3";
  sc3.description = "2-DOF arm, circle obstacles";
  sc3.robot = Arm({1.0, 0.8}, {{-kPi, kPi}, {-2.8, 2.8}});
  sc3.sampler = circles;
  sc3.resolution = 128;
  // Coverage of obstacle geometries matters more than samples per obstacle
  // for how well the model generalizes to unseen ones.
  sc3.train_obstacles = 2048;
  sc3.samples_per_obstacle = 256;
  systems[sc3.id] = sc3;

  // The sc3 arm with a bounding circle over a 0.4 m third link (0.4 + link
  // radius), for hybrid planning with a 3-DOF arm.
  SystemSpec tool = sc3;
  tool.id = "sc3_tool";
  tool.description = "2-DOF arm with a bounding circle for a third link";
  tool.robot.tool_radius = 0.45;
  tool.train_obstacles = 1024;
  tool.samples_per_obstacle = 128;
  systems[tool.id] = tool;

  SystemSpec sc4;
  sc4.id = "sc4";
  sc4.description = "3-DOF arm, circle obstacles";
  sc4.robot = Arm({0.8, 0.6, 0.4}, {{-kPi, kPi}, {-2.6, 2.6}, {-2.6, 2.6}});
  sc4.sampler = circles;
  sc4.resolution = 32;
  sc4.self_samples = 65536;
  systems[sc4.id] = sc4;

  SystemSpec mr;
  mr.id = "mr";
  mr.description = "4-DOF arm, circle obstacles";
  mr.robot = Arm({0.6, 0.5, 0.4, 0.3},
                 {{-kPi, kPi}, {-2.4, 2.4}, {-2.4, 2.4}, {-2.4, 2.4}});
  mr.sampler = circles;
  mr.resolution = 16;
  mr.train_obstacles = 128;
  mr.self_samples = 65536;
  systems[mr.id] = mr;

  SystemSpec wd;
  wd.id = "wd";
  wd.description = "3-DOF arm, box obstacles";
  wd.robot = sc4.robot;
  wd.sampler = circles;
  wd.sampler.kind = ShapeKind::kBox;
  wd.sampler.size_low = 0.1;
  wd.sampler.size_high = 0.25;
  wd.resolution = 32;
  wd.self_samples = 65536;
  systems[wd.id] = wd;
  return systems;
}

const std::map<std::string, SystemSpec>& Systems() {
  static const std::map<std::string, SystemSpec> systems = MakeSystems();
  return systems;
}

}  // namespace

const SystemSpec& GetSystem(const std::string& id) {
  const auto it = Systems().find(id);
  if (it == Systems().end()) throw std::invalid_argument("unknown system '" + id + "'");
  return it->second;
}

std::vector<std::string> SystemIds() {
  std::vector<std::string> ids;
  for (const auto& [id, spec] : Systems()) ids.push_back(id);
  return ids;
}

void BenchmarkConfig::Validate() const {
  GetSystem(system);
  if (num_worlds < 1 || queries_per_world < 1 || pbrm_vertices < 1 ||
      baseline_vertices < 1 || num_neighbors < 1) {
    throw std::invalid_argument("benchmark counts must be positive");
  }
  if (!(prm_star_time_budget_s > 0.0) || prm_star_sample_budget < 0) {
    throw std::invalid_argument("invalid PRM* budget");
  }
  if (backend != "nscdf" && backend != "oracle") {
    throw std::invalid_argument("backend must be 'nscdf' or 'oracle'");
  }
  if (backend == "nscdf" && model_path.empty()) {
    throw std::invalid_argument("the nscdf backend needs model_path");
  }
  if (validation_geometries < 0) {
    throw std::invalid_argument("validation_geometries must be >= 0");
  }
}

json BenchmarkConfigToJson(const BenchmarkConfig& c) {
  return {{"system", c.system},
          {"num_worlds", c.num_worlds},
          {"queries_per_world", c.queries_per_world},
          {"pbrm_vertices", c.pbrm_vertices},
          {"baseline_vertices", c.baseline_vertices},
          {"num_neighbors", c.num_neighbors},
          {"prm_star_time_budget_s", c.prm_star_time_budget_s},
          {"prm_star_sample_budget", c.prm_star_sample_budget},
          {"seed", c.seed},
          {"backend", c.backend},
          {"model_path", c.model_path},
          {"self_model_path", c.self_model_path},
          {"margin", c.margin},
          {"validation_geometries", c.validation_geometries},
          {"hybrid", c.hybrid}};
}

BenchmarkConfig BenchmarkConfigFromJson(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("benchmark config must be an object");
  BenchmarkConfig c;
  static const std::set<std::string> known = {
      "system", "num_worlds", "queries_per_world", "pbrm_vertices",
      "baseline_vertices", "num_neighbors", "prm_star_time_budget_s",
      "prm_star_sample_budget", "seed", "backend", "model_path",
      "self_model_path", "margin", "validation_geometries", "hybrid"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown config key '" + key + "'");
  }
  try {
    c.system = j.value("system", c.system);
    c.num_worlds = j.value("num_worlds", c.num_worlds);
    c.queries_per_world = j.value("queries_per_world", c.queries_per_world);
    c.pbrm_vertices = j.value("pbrm_vertices", c.pbrm_vertices);
    c.baseline_vertices = j.value("baseline_vertices", c.baseline_vertices);
    c.num_neighbors = j.value("num_neighbors", c.num_neighbors);
    c.prm_star_time_budget_s = j.value("prm_star_time_budget_s", c.prm_star_time_budget_s);
    c.prm_star_sample_budget = j.value("prm_star_sample_budget", c.prm_star_sample_budget);
    c.seed = j.value("seed", c.seed);
    c.backend = j.value("backend", c.backend);
    c.model_path = j.value("model_path", c.model_path);
    c.self_model_path = j.value("self_model_path", c.self_model_path);
    c.margin = j.value("margin", c.margin);
    c.validation_geometries = j.value("validation_geometries", c.validation_geometries);
    c.hybrid = j.value("hybrid", c.hybrid);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad config value: ") + e.what());
  }
  c.Validate();
  return c;
}

double LatticeDiagonal(const RobotModel& robot, int resolution) {
  double sum = 0.0;
  for (const JointLimit& limit : robot.joint_limits) {
    const double h = (limit.high - limit.low) / (resolution - 1);
    sum += h * h;
  }
  return std::sqrt(sum);
}

Scenario SampleWorld(const SystemSpec& system, std::mt19937_64& rng,
                     double min_free_fraction, int measure_samples) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Scenario scenario{system.robot, {}};
    for (int i = 0; i < system.obstacles_per_world; ++i) {
      scenario.obstacles.push_back(system.sampler.Sample(rng));
    }
    int free = 0;
    for (int i = 0; i < measure_samples; ++i) {
      const Config q = SampleUniform(scenario.robot, rng);
      if (!CheckCollision(scenario.robot, q, scenario.obstacles)) ++free;
    }
    if (free >= min_free_fraction * measure_samples) return scenario;
  }
  throw Error("could not sample a world with enough free space");
}

FreeSpaceComponents::FreeSpaceComponents(const Scenario& scenario, int resolution)
    : robot_(scenario.robot), resolution_(resolution) {
  const int dof = robot_.dof();
  std::size_t cells = 1;
  std::vector<std::size_t> stride(dof, 1);
  for (int d = 0; d < dof; ++d) {
    if (d > 0) stride[d] = stride[d - 1] * resolution;
    cells *= static_cast<std::size_t>(resolution);
    if (cells > kMaxGridCells) throw ResourceError("connectivity grid too large");
  }
  labels_.assign(cells, -2);
  Config q(dof);
  for (std::size_t i = 0; i < cells; ++i) {
    std::size_t rest = i;
    for (int d = 0; d < dof; ++d) {
      const auto k = rest % resolution;
      rest /= resolution;
      const JointLimit& limit = robot_.joint_limits[d];
      q(d) = limit.low + (limit.high - limit.low) * k / (resolution - 1);
    }
    if (CheckCollision(robot_, q, scenario.obstacles)) labels_[i] = -1;
  }
  int next = 0;
  std::queue<std::size_t> frontier;
  for (std::size_t seed = 0; seed < cells; ++seed) {
    if (labels_[seed] != -2) continue;
    labels_[seed] = next;
    frontier.push(seed);
    while (!frontier.empty()) {
      const std::size_t i = frontier.front();
      frontier.pop();
      for (int d = 0; d < dof; ++d) {
        const std::size_t k = (i / stride[d]) % resolution;
        if (k > 0 && labels_[i - stride[d]] == -2) {
          labels_[i - stride[d]] = next;
          frontier.push(i - stride[d]);
        }
        if (k + 1 < static_cast<std::size_t>(resolution) &&
            labels_[i + stride[d]] == -2) {
          labels_[i + stride[d]] = next;
          frontier.push(i + stride[d]);
        }
      }
    }
    ++next;
  }
}

int FreeSpaceComponents::Label(const Config& q) const {
  std::size_t index = 0, stride = 1;
  for (int d = 0; d < robot_.dof(); ++d) {
    const JointLimit& limit = robot_.joint_limits[d];
    const double t = (q(d) - limit.low) / (limit.high - limit.low) * (resolution_ - 1);
    const auto k = static_cast<std::size_t>(
        std::clamp(std::lround(t), 0L, static_cast<long>(resolution_ - 1)));
    index += k * stride;
    stride *= static_cast<std::size_t>(resolution_);
  }
  return labels_[index];
}

std::pair<Config, Config> SampleQuery(const Scenario& scenario,
                                      std::mt19937_64& rng,
                                      const FreeSpaceComponents* components,
                                      int max_tries, double step) {
  const RobotModel& robot = scenario.robot;
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    const Config a = SampleUniform(robot, rng);
    const Config b = SampleUniform(robot, rng);
    if (CheckCollision(robot, a, scenario.obstacles) ||
        CheckCollision(robot, b, scenario.obstacles)) {
      continue;
    }
    if (SegmentCollisionFree(robot, scenario.obstacles, a, b, step)) continue;
    if (components) {
      const int la = components->Label(a);
      if (la < 0 || la != components->Label(b)) continue;
    }
    return {a, b};
  }
  throw QuerySamplingFailedError(
      fmt::format("no query pair with a blocked straight line after {} tries", max_tries));
}

std::vector<PlannerSummary> BenchmarkReport::Summaries() const {
  std::vector<PlannerSummary> out;
  for (const std::string& name : PlannerNames()) {
    PlannerSummary s;
    s.planner = name;
    double time_sum = 0.0, length_sum = 0.0;
    for (const QueryRecord& r : records) {
      if (r.planner != name) continue;
      ++s.attempted;
      if (r.status != PlanStatus::kSolved) continue;
      ++s.returned;
      if (!r.collision_free) {
        ++s.colliding;
        continue;
      }
      ++s.solved;
      time_sum += r.time_ms;
      length_sum += r.length;
    }
    if (s.solved > 0) {
      s.mean_time_ms = time_sum / s.solved;
      s.mean_length = length_sum / s.solved;
    }
    out.push_back(s);
  }
  return out;
}

namespace {

std::shared_ptr<const DistanceField> MakeField(const BenchmarkConfig& config,
                                               const SystemSpec& system,
                                               const Scenario& scenario,
                                               std::shared_ptr<const MlpModel> model,
                                               std::shared_ptr<const MlpModel> self_model) {
  if (config.backend == "oracle") {
    return std::make_shared<OracleField>(scenario.robot, scenario.obstacles,
                                         system.resolution);
  }
  return std::make_shared<NeuralField>(std::move(model), scenario.obstacles,
                                       std::move(self_model));
}

}  // namespace

BenchmarkReport RunBenchmark(const BenchmarkConfig& config) {
  config.Validate();
  const SystemSpec& system = GetSystem(config.system);
  BenchmarkReport report;
  report.config = config;
  report.margin = config.margin >= 0.0 ? config.margin
                                       : LatticeDiagonal(system.robot, system.resolution);

  std::shared_ptr<const MlpModel> model;
  std::shared_ptr<const MlpModel> self_model;
  if (config.backend == "nscdf") {
    model = std::make_shared<MlpModel>(LoadModel(config.model_path));
    if (model->dof() != system.robot.dof() ||
        model->geometry_size() != GeometrySize(system.sampler.kind)) {
      throw std::invalid_argument("model does not match the benchmark system");
    }
    if (!config.self_model_path.empty()) {
      self_model = std::make_shared<MlpModel>(LoadModel(config.self_model_path));
    }
    if (config.validation_geometries > 0) {
      std::mt19937_64 rng(StreamSeed(config.seed, 7));
      ObstacleSet unseen;
      while (static_cast<int>(unseen.size()) < config.validation_geometries) {
        const GeometryVector g = system.sampler.Sample(rng);
        // Geometries the arm cannot reach carry no information.
        if (BuildGrid(system.robot, g, system.resolution).num_boundary() > 0) {
          unseen.push_back(g);
        }
      }
      report.validation = ValidateModel(*model, system.robot, unseen, system.resolution);
    }
  }

  PbrmParams pbrm_params;
  pbrm_params.num_vertices = config.pbrm_vertices;
  pbrm_params.num_neighbors = config.num_neighbors;
  PrmParams prm_params;
  prm_params.num_vertices = config.baseline_vertices;
  prm_params.num_neighbors = config.num_neighbors;
  PrmBudget budget;
  budget.time_budget_s = config.prm_star_time_budget_s;
  budget.sample_budget = config.prm_star_sample_budget;

  const int connectivity_resolution = system.robot.dof() == 2 ? 256 : system.resolution;
  for (int w = 0; w < config.num_worlds; ++w) {
    WorldRecord world;
    world.index = w;
    world.seed = StreamSeed(config.seed, 1000 + static_cast<std::uint64_t>(w));
    std::mt19937_64 world_rng(world.seed);
    const Scenario scenario = SampleWorld(system, world_rng);
    world.scenario_hash = HexDigest(HashJson(ScenarioToJson(scenario)));

    const ClearanceModel clearance(MakeField(config, system, scenario, model, self_model),
                                   scenario.robot, report.margin);
    auto t0 = Clock::now();
    auto roadmap = std::make_shared<const Roadmap>(
        BuildRoadmap(clearance, pbrm_params, StreamSeed(world.seed, 1)));
    world.pbrm_build_ms = MillisecondsSince(t0);
    world.roadmap_vertices = roadmap->num_vertices();
    world.roadmap_edges = static_cast<int>(roadmap->edges().size());
    PbrmPlanner planner(roadmap, clearance, pbrm_params);
    if (config.hybrid) planner.EnableHybrid({scenario.robot, scenario.obstacles});

    t0 = Clock::now();
    const PrmRoadmap prm = PrmBuild(scenario, PrmMode::kPrm, prm_params,
                                    StreamSeed(world.seed, 2));
    world.prm_build_ms = MillisecondsSince(t0);
    t0 = Clock::now();
    const PrmRoadmap prm_star = PrmBuild(scenario, PrmMode::kPrmStar, prm_params,
                                         StreamSeed(world.seed, 3));
    world.prm_star_build_ms = MillisecondsSince(t0);

    const FreeSpaceComponents components(scenario, connectivity_resolution);
    std::mt19937_64 query_rng(StreamSeed(world.seed, 4));
    for (int qi = 0; qi < config.queries_per_world; ++qi) {
      std::pair<Config, Config> query;
      try {
        query = SampleQuery(scenario, query_rng, &components);
      } catch (const QuerySamplingFailedError& e) {
        spdlog::warn("world {}: {}", w, e.what());
        break;
      }
      const auto& [start, goal] = query;
      ++world.queries;
      auto base = [&](const std::string& name) {
        QueryRecord r;
        r.world = w;
        r.query = qi;
        r.planner = name;
        return r;
      };

      QueryRecord pbrm = base("PBRM");
      QueryRecord pbrm_star = base("PBRM*");
      t0 = Clock::now();
      const PlanResult plan = planner.Solve(start, goal);
      pbrm.time_ms = MillisecondsSince(t0);
      pbrm.status = pbrm_star.status = plan.status;
      if (plan.status == PlanStatus::kSolved) {
        pbrm.length = plan.length;
        pbrm.corridor_size = pbrm_star.corridor_size =
            static_cast<int>(plan.corridor.size());
        pbrm.collision_free = PathCollisionFree(scenario.robot, scenario.obstacles,
                                                plan.polyline, kValidationStep);
        std::vector<Config> optimized;
        t0 = Clock::now();
        try {
          const OptimizedPath path = OptimizeCorridor(plan.corridor);
          optimized = plan.Assemble(path.waypoints);
          pbrm_star.residual = path.residual;
        } catch (const CorridorStalledError& e) {
          optimized = plan.Assemble(e.fallback());
          pbrm_star.fallback = true;
          pbrm_star.residual = -1.0;
        }
        pbrm_star.time_ms = pbrm.time_ms + MillisecondsSince(t0);
        pbrm_star.length = PathLength(optimized);
        pbrm_star.collision_free = PathCollisionFree(scenario.robot, scenario.obstacles,
                                                     optimized, kValidationStep);
        if (w == 0 && !report.first_plan) {
          report.first_plan = plan;
          report.first_optimized = optimized;
        }
      }
      world.pbrm_solved += pbrm.solved();
      pbrm.used_hybrid = pbrm_star.used_hybrid = plan.used_hybrid;
      report.records.push_back(pbrm);
      report.records.push_back(pbrm_star);

      const std::uint64_t query_seed = StreamSeed(world.seed, 100 + qi);
      for (const auto* roadmap_ptr : {&prm, &prm_star}) {
        const bool star = roadmap_ptr->mode == PrmMode::kPrmStar;
        QueryRecord r = base(star ? "PRM*" : "PRM");
        t0 = Clock::now();
        const PrmPlanResult res = PrmQuery(*roadmap_ptr, scenario, start, goal,
                                           prm_params, budget, query_seed);
        r.time_ms = MillisecondsSince(t0);
        r.status = res.status;
        if (res.status == PlanStatus::kSolved) {
          r.length = res.length;
          r.collision_free = PathCollisionFree(scenario.robot, scenario.obstacles,
                                               res.path, kValidationStep);
        }
        report.records.push_back(r);
      }
    }
    spdlog::info("world {}: PBRM solved {}/{} ({} vertices, {} edges)", w,
                 world.pbrm_solved, world.queries, world.roadmap_vertices,
                 world.roadmap_edges);
    if (w == 0) {
      report.first_world = scenario;
      report.first_roadmap = roadmap->balls();
    }
    report.worlds.push_back(world);
  }
  const auto summaries = report.Summaries();
  if (summaries[0].success_rate() < 0.9) {
    spdlog::warn("PBRM solved only {:.1f}% of the queries (expected at least 90%)",
                 100.0 * summaries[0].success_rate());
  }
  return report;
}

namespace {

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

// Fixed-precision number formatting keeps the text outputs stable.
std::string Num(double v, int digits = 6) { return fmt::format("{:.{}f}", v, digits); }

}  // namespace

void EmitReport(const BenchmarkReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::vector<PlannerSummary> summaries = report.Summaries();
  const std::string& system = report.config.system;

  json j;
  json config = BenchmarkConfigToJson(report.config);
  // Paths depend on where the run happened, not on what it computed.
  config.erase("model_path");
  config.erase("self_model_path");
  j["config"] = config;
  j["margin"] = report.margin;
  json worlds = json::array();
  for (const WorldRecord& w : report.worlds) {
    worlds.push_back({{"index", w.index}, {"seed", w.seed},
                      {"scenario_hash", w.scenario_hash},
                      {"roadmap_vertices", w.roadmap_vertices},
                      {"roadmap_edges", w.roadmap_edges}, {"queries", w.queries},
                      {"pbrm_solved", w.pbrm_solved}});
  }
  j["worlds"] = worlds;
  json records = json::array();
  for (const QueryRecord& r : report.records) {
    records.push_back({{"world", r.world}, {"query", r.query}, {"planner", r.planner},
                       {"status", PlanStatusName(r.status)}, {"length", r.length},
                       {"collision_free", r.collision_free},
                       {"corridor_size", r.corridor_size}, {"residual", r.residual},
                       {"used_hybrid", r.used_hybrid}, {"fallback", r.fallback}});
  }
  j["records"] = records;
  json summary = json::array();
  for (const PlannerSummary& s : summaries) {
    summary.push_back({{"planner", s.planner}, {"attempted", s.attempted},
                       {"returned", s.returned}, {"colliding", s.colliding},
                       {"solved", s.solved},
                       {"success_rate", s.success_rate()},
                       {"collision_rate", s.collision_rate()},
                       {"mean_length", s.mean_length}});
  }
  j["summary"] = summary;
  if (report.validation) {
    const ConfusionCounts& c = report.validation->counts;
    j["validation"] = {{"accuracy", c.accuracy()}, {"recall", c.recall()},
                       {"precision", c.precision()}, {"true_positive", c.true_positive},
                       {"true_negative", c.true_negative},
                       {"false_positive", c.false_positive},
                       {"false_negative", c.false_negative}};
  }
  WriteFile(dir / "report.json", j.dump(2) + "\n");

  std::string timings = "world,query,planner,status,time_ms\n";
  for (const QueryRecord& r : report.records) {
    timings += fmt::format("{},{},{},{},{}\n", r.world, r.query, r.planner,
                           PlanStatusName(r.status), Num(r.time_ms, 4));
  }
  for (const PlannerSummary& s : summaries) {
    timings += fmt::format("mean,,{},solved={},{}\n", s.planner, s.solved,
                           Num(s.mean_time_ms, 4));
  }
  for (const WorldRecord& w : report.worlds) {
    timings += fmt::format("build,{},PBRM,,{}\nbuild,{},PRM,,{}\nbuild,{},PRM*,,{}\n",
                           w.index, Num(w.pbrm_build_ms, 2), w.index,
                           Num(w.prm_build_ms, 2), w.index, Num(w.prm_star_build_ms, 2));
  }
  WriteFile(dir / "timings.csv", timings);

  std::string csv =
      "system,planner,mean_time_ms,mean_length,success_rate,collision_rate,solved,attempted\n";
  std::string text = fmt::format("{:<8} {:<7} {:>12} {:>10} {:>9} {:>10}\n", "system",
                                 "planner", "time [ms]", "length", "success",
                                 "collisions");
  for (const PlannerSummary& s : summaries) {
    csv += fmt::format("{},{},{},{},{},{},{},{}\n", system, s.planner,
                       Num(s.mean_time_ms, 4), Num(s.mean_length, 4),
                       Num(s.success_rate(), 4), Num(s.collision_rate(), 4), s.solved,
                       s.attempted);
    text += fmt::format("{:<8} {:<7} {:>12.3f} {:>10.3f} {:>8.1f}% {:>9.1f}%\n", system,
                        s.planner, s.mean_time_ms, s.mean_length,
                        100.0 * s.success_rate(), 100.0 * s.collision_rate());
  }
  WriteFile(dir / "table1.csv", csv);
  WriteFile(dir / "table1.txt", text);

  if (report.validation) {
    const ConfusionCounts& c = report.validation->counts;
    WriteFile(dir / "table2.csv",
              fmt::format("system,accuracy,recall,precision,true_positive,true_negative,"
                          "false_positive,false_negative\n{},{},{},{},{},{},{},{}\n",
                          system, Num(c.accuracy(), 2), Num(c.recall(), 2),
                          Num(c.precision(), 2), c.true_positive, c.true_negative,
                          c.false_positive, c.false_negative));
  }

  if (!report.worlds.empty()) {
    std::vector<Config> poses;
    if (report.first_plan) {
      poses = {report.first_plan->polyline.front(), report.first_plan->polyline.back()};
    }
    WriteFile(dir / "scene.svg", SceneSvg(report.first_world, poses));
    if (report.first_world.robot.dof() == 2) {
      std::vector<Ball> corridor;
      std::vector<Config> polyline;
      if (report.first_plan) {
        corridor = report.first_plan->corridor.balls;
        polyline = report.first_plan->polyline;
      }
      WriteFile(dir / "cspace.svg",
                CSpaceSvg(report.first_world, report.first_roadmap, corridor, polyline,
                          report.first_optimized));
    }
  }
}

HybridDemo MakeHybridDemo() {
  HybridDemo demo;
  demo.model_system = "sc3_tool";
  demo.scene.robot = Arm({1.0, 0.8, 0.4}, {{-kPi, kPi}, {-2.8, 2.8}, {-2.8, 2.8}});
  // A shelf just below the stretched arm's wrist, and some clutter.
  demo.scene.obstacles = {
      GeometryVector::Circle(Vec2(1.8, -0.55), 0.2),
      GeometryVector::Circle(Vec2(-0.9, 1.2), 0.25),
      GeometryVector::Circle(Vec2(0.2, -1.6), 0.2),
      GeometryVector::Circle(Vec2(-1.5, -0.6), 0.2),
  };
  demo.start = Config(3);
  // Third link pointing up, away from the shelf.
  demo.start << 0.0, 0.0, kPi / 2;
  demo.goal = Config(3);
  demo.goal << 1.8, -0.6, 0.0;
  return demo;
}

HybridDemoResult RunHybridDemo(std::shared_ptr<const MlpModel> model, double margin,
                               int num_vertices, std::uint64_t seed) {
  const HybridDemo demo = MakeHybridDemo();
  const SystemSpec& system = GetSystem(demo.model_system);
  if (!model || model->dof() != system.robot.dof()) {
    throw std::invalid_argument("hybrid demo needs a model of the " + system.id + " system");
  }
  auto base = std::make_shared<const NeuralField>(model, demo.scene.obstacles);
  auto field = std::make_shared<const ProjectedField>(base, demo.scene.robot.dof());
  const ClearanceModel clearance(field, demo.scene.robot, margin);
  PbrmParams params;
  params.num_vertices = num_vertices;

  HybridDemoResult out;
  out.start_clearance = clearance.Radius(demo.start);
  out.start_free = !CheckCollision(demo.scene.robot, demo.start, demo.scene.obstacles);
  auto roadmap = std::make_shared<const Roadmap>(BuildRoadmap(clearance, params, seed));
  out.roadmap = *roadmap;

  PbrmPlanner planner(roadmap, clearance, params);
  out.without_hybrid = planner.Solve(demo.start, demo.goal);
  planner.EnableHybrid({demo.scene.robot, demo.scene.obstacles});
  out.with_hybrid = planner.Solve(demo.start, demo.goal);
  const PbrmPlanner::QueryConnection connection = planner.ConnectQuery(demo.start);
  out.hybrid_edges = static_cast<std::size_t>(std::count_if(
      connection.edges.begin(), connection.edges.end(),
      [](const PbrmPlanner::QueryEdge& e) { return e.kind == EdgeKind::kHybridVerified; }));
  if (out.with_hybrid.status == PlanStatus::kSolved) {
    try {
      out.path = out.with_hybrid.Assemble(OptimizeCorridor(out.with_hybrid.corridor).waypoints);
    } catch (const CorridorStalledError& e) {
      out.path = out.with_hybrid.Assemble(e.fallback());
    }
    out.path_valid = PathCollisionFree(demo.scene.robot, demo.scene.obstacles, out.path,
                                       kValidationStep);
  }
  return out;
}

std::string SceneSvg(const Scenario& scenario, const std::vector<Config>& poses) {
  constexpr double kScale = 100.0;
  constexpr double kHalf = 2.5;
  auto X = [](double x) { return Num((x + kHalf) * kScale, 2); };
  auto Y = [](double y) { return Num((kHalf - y) * kScale, 2); };
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" "
      "viewBox=\"0 0 {0} {0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      Num(2 * kHalf * kScale, 0));
  for (const GeometryVector& g : scenario.obstacles) {
    if (g.kind == ShapeKind::kCircle) {
      svg += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"#888\"/>\n",
                         X(g.center().x()), Y(g.center().y()), Num(g.radius() * kScale, 2));
    } else {
      const Vec2 lo = g.center() - g.half_extents();
      svg += fmt::format(
          "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#888\"/>\n", X(lo.x()),
          Y(lo.y() + 2 * g.half_extents().y()), Num(2 * g.half_extents().x() * kScale, 2),
          Num(2 * g.half_extents().y() * kScale, 2));
    }
  }
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  for (std::size_t p = 0; p < poses.size(); ++p) {
    const char* color = colors[p % 4];
    for (const Capsule& c : ForwardKinematics(scenario.robot, poses[p])) {
      svg += fmt::format(
          "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"{}\" "
          "stroke-linecap=\"round\" stroke-opacity=\"0.8\"/>\n",
          X(c.start.x()), Y(c.start.y()), X(c.end.x()), Y(c.end.y()), color,
          Num(2 * c.radius * kScale, 2));
    }
    if (scenario.robot.tool_radius > 0.0) {
      const Vec2 tip = EndEffector(scenario.robot, poses[p]);
      svg += fmt::format(
          "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"{}\"/>\n", X(tip.x()),
          Y(tip.y()), Num(scenario.robot.tool_radius * kScale, 2), color);
    }
  }
  svg += "</svg>\n";
  return svg;
}

std::string CSpaceSvg(const Scenario& scenario, const std::vector<Ball>& balls,
                      const std::vector<Ball>& corridor,
                      const std::vector<Config>& polyline,
                      const std::vector<Config>& optimized, int resolution) {
  const RobotModel& robot = scenario.robot;
  if (robot.dof() != 2) throw std::invalid_argument("configuration-space plots need 2 DOF");
  constexpr double kSize = 600.0;
  const JointLimit& a = robot.joint_limits[0];
  const JointLimit& b = robot.joint_limits[1];
  const double sx = kSize / (a.high - a.low);
  const double sy = kSize / (b.high - b.low);
  auto X = [&](double q) { return Num((q - a.low) * sx, 2); };
  auto Y = [&](double q) { return Num((b.high - q) * sy, 2); };
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" "
      "viewBox=\"0 0 {0} {0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      Num(kSize, 0));
  const double cw = kSize / resolution;
  Config q(2);
  for (int i = 0; i < resolution; ++i) {
    for (int k = 0; k < resolution; ++k) {
      q << a.low + (i + 0.5) * (a.high - a.low) / resolution,
          b.low + (k + 0.5) * (b.high - b.low) / resolution;
      if (CheckCollision(robot, q, scenario.obstacles)) {
        svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#bbb\"/>\n",
                           Num(i * cw, 2), Num(kSize - (k + 1) * cw, 2), Num(cw, 2),
                           Num(cw, 2));
      }
    }
  }
  auto ellipse = [&](const Ball& ball, const char* style) {
    return fmt::format("<ellipse cx=\"{}\" cy=\"{}\" rx=\"{}\" ry=\"{}\" {}/>\n",
                       X(ball.center(0)), Y(ball.center(1)), Num(ball.radius * sx, 2),
                       Num(ball.radius * sy, 2), style);
  };
  for (const Ball& ball : balls) {
    svg += ellipse(ball, "fill=\"none\" stroke=\"#2ca02c\" stroke-width=\"0.8\"");
  }
  for (const Ball& ball : corridor) {
    svg += ellipse(ball, "fill=\"#2ca02c\" fill-opacity=\"0.15\" stroke=\"#2ca02c\"");
  }
  auto polyline_svg = [&](const std::vector<Config>& points, const char* style) {
    if (points.empty()) return std::string();
    std::string s = "<polyline points=\"";
    for (const Config& p : points) s += fmt::format("{},{} ", X(p(0)), Y(p(1)));
    s += fmt::format("\" fill=\"none\" {}/>\n", style);
    return s;
  };
  svg += polyline_svg(polyline, "stroke=\"black\" stroke-dasharray=\"6 4\" stroke-width=\"1.5\"");
  svg += polyline_svg(optimized, "stroke=\"#1f77b4\" stroke-width=\"2.5\"");
  svg += "</svg>\n";
  return svg;
}

}  // namespace scdf
