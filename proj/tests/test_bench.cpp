#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "scdf/bench.hpp"
#include "test_util.hpp"

namespace scdf {
namespace {

namespace fs = std::filesystem;
using testing::Q;

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path ScratchDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("scdf_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST_CASE("system registry") {
  for (const std::string& id : SystemIds()) {
    const SystemSpec& s = GetSystem(id);
    CHECK(s.id == id);
    CHECK_NOTHROW(s.robot.Validate());
  }
  CHECK(GetSystem("sc3").robot.dof() == 2);
  CHECK(GetSystem("sc4").robot.dof() == 3);
  CHECK(GetSystem("mr").robot.dof() == 4);
  CHECK(GetSystem("wd").sampler.kind == ShapeKind::kBox);
  CHECK_THROWS_AS(GetSystem("nope"), std::invalid_argument);
}

TEST_CASE("benchmark config") {
  BenchmarkConfig c;
  c.backend = "oracle";
  c.num_worlds = 3;
  c.prm_star_sample_budget = 40;
  c.seed = 99;
  const BenchmarkConfig back = BenchmarkConfigFromJson(BenchmarkConfigToJson(c));
  CHECK(BenchmarkConfigToJson(back) == BenchmarkConfigToJson(c));
  CHECK_THROWS_AS(BenchmarkConfigFromJson({{"bogus", 1}}), std::invalid_argument);
  CHECK_THROWS_AS(BenchmarkConfigFromJson({{"backend", "oracle"}, {"num_worlds", 0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(BenchmarkConfigFromJson({{"backend", "oracle"}, {"num_worlds", "x"}}),
                  std::invalid_argument);
  // The learned backend needs a model.
  CHECK_THROWS_AS(BenchmarkConfigFromJson(nlohmann::json::object()), std::invalid_argument);
}

TEST_CASE("lattice diagonal matches the oracle grid") {
  const SystemSpec& s = GetSystem("sc3");
  const OracleField field(s.robot, {GeometryVector::Circle({1.0, 0.5}, 0.2)}, s.resolution);
  CHECK(LatticeDiagonal(s.robot, s.resolution) == doctest::Approx(field.lattice_diagonal()));
}

TEST_CASE("world sampling") {
  const SystemSpec& s = GetSystem("sc3");
  std::mt19937_64 a(5), b(5);
  const Scenario w1 = SampleWorld(s, a);
  const Scenario w2 = SampleWorld(s, b);
  CHECK(ScenarioToJson(w1) == ScenarioToJson(w2));
  REQUIRE(w1.obstacles.size() == static_cast<std::size_t>(s.obstacles_per_world));
  for (const GeometryVector& g : w1.obstacles) {
    CHECK(g.kind == ShapeKind::kCircle);
    CHECK(g.radius() >= s.sampler.size_low);
    CHECK(g.radius() <= s.sampler.size_high);
    CHECK(g.center().x() >= s.sampler.center_low.x());
    CHECK(g.center().y() <= s.sampler.center_high.y());
  }
  std::mt19937_64 c(6);
  CHECK(ScenarioToJson(SampleWorld(s, c)) != ScenarioToJson(w1));
}

TEST_CASE("query sampling") {
  SUBCASE("an empty workspace has no blocked straight lines") {
    const Scenario empty{testing::TwoLinkArm(), {}};
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(SampleQuery(empty, rng, nullptr, 200), QuerySamplingFailedError);
  }
  SUBCASE("queries are free, blocked and connected") {
    const SystemSpec& s = GetSystem("sc3");
    std::mt19937_64 rng(2);
    const Scenario world = SampleWorld(s, rng);
    const FreeSpaceComponents components(world, 128);
    for (int i = 0; i < 20; ++i) {
      const auto [a, b] = SampleQuery(world, rng, &components);
      CHECK_FALSE(CheckCollision(world.robot, a, world.obstacles));
      CHECK_FALSE(CheckCollision(world.robot, b, world.obstacles));
      CHECK_FALSE(SegmentCollisionFree(world.robot, world.obstacles, a, b, 1e-3));
      CHECK(components.Label(a) == components.Label(b));
      CHECK(components.Label(a) >= 0);
    }
  }
  SUBCASE("a wall separates components") {
    const Scenario wall{testing::TwoLinkArm(1.0, 0.8),
                        {GeometryVector::Circle({0.35, 0.0}, 0.1)}};
    const FreeSpaceComponents components(wall, 128);
    CHECK(components.Label(Q({-1.5, 0.3})) >= 0);
    CHECK(components.Label(Q({-1.5, 0.3})) == components.Label(Q({-2.5, -2.0})));
    CHECK(components.Label(Q({-1.5, 0.3})) != components.Label(Q({1.5, -0.3})));
    CHECK(components.Label(Q({0.0, 0.0})) == -1);
  }
}

BenchmarkConfig SmallOracleConfig() {
  BenchmarkConfig c;
  c.backend = "oracle";
  c.num_worlds = 2;
  c.queries_per_world = 4;
  c.pbrm_vertices = 150;
  c.baseline_vertices = 150;
  c.prm_star_sample_budget = 60;
  c.seed = 3;
  return c;
}

TEST_CASE("a small oracle-backed benchmark") {
  const BenchmarkReport report = RunBenchmark(SmallOracleConfig());
  REQUIRE(report.worlds.size() == 2);
  int queries = 0;
  for (const WorldRecord& w : report.worlds) queries += w.queries;
  CHECK(queries == 8);
  CHECK(report.records.size() == 4u * queries);

  SUBCASE("aggregates are recomputable from the records") {
    std::map<std::string, std::pair<int, double>> solved;
    std::map<std::string, int> returned;
    for (const QueryRecord& r : report.records) {
      returned[r.planner] += r.status == PlanStatus::kSolved;
      if (r.status == PlanStatus::kSolved && r.collision_free) {
        ++solved[r.planner].first;
        solved[r.planner].second += r.length;
      }
    }
    for (const PlannerSummary& s : report.Summaries()) {
      CHECK(s.attempted == queries);
      CHECK(s.returned == returned[s.planner]);
      CHECK(s.solved + s.colliding == s.returned);
      CHECK(s.solved == solved[s.planner].first);
      if (s.solved > 0) {
        CHECK(s.mean_length == doctest::Approx(solved[s.planner].second / s.solved));
      }
    }
  }
  SUBCASE("PBRM paths are collision-free and the optimizer never lengthens them") {
    std::map<std::pair<int, int>, const QueryRecord*> pbrm;
    for (const QueryRecord& r : report.records) {
      if (r.planner == "PBRM") pbrm[{r.world, r.query}] = &r;
    }
    for (const QueryRecord& r : report.records) {
      if (r.status != PlanStatus::kSolved) continue;
      CHECK(r.collision_free);
      if (r.planner != "PBRM*") continue;
      const QueryRecord& base = *pbrm.at({r.world, r.query});
      CHECK(r.length <= base.length + 1e-9);
      if (!r.fallback) CHECK(r.residual <= 1e-6);
    }
  }
  SUBCASE("emitted files") {
    const fs::path a = ScratchDir("bench_a"), b = ScratchDir("bench_b");
    EmitReport(report, a);
    EmitReport(RunBenchmark(SmallOracleConfig()), b);
    CHECK(ReadFile(a / "report.json") == ReadFile(b / "report.json"));
    std::istringstream table(ReadFile(a / "table1.csv"));
    std::string line;
    int rows = -1;  // header
    while (std::getline(table, line)) ++rows;
    CHECK(rows == static_cast<int>(PlannerNames().size()));
    CHECK(fs::exists(a / "timings.csv"));
    CHECK(fs::exists(a / "scene.svg"));
    CHECK(fs::exists(a / "cspace.svg"));
    const auto j = nlohmann::json::parse(ReadFile(a / "report.json"));
    CHECK(j["records"].size() == report.records.size());
    CHECK_FALSE(j["config"].contains("model_path"));
    fs::remove_all(a);
    fs::remove_all(b);
  }
}

int RunCli(const std::string& args) {
  const std::string command = std::string(SCDF_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = ScratchDir("cli");
  const std::string out = "--out-dir " + dir.string();
  CHECK(RunCli("--help") == 0);
  CHECK(RunCli("no-such-command") == 2);
  CHECK(RunCli(out + " plan --roadmap " + (dir / "missing.json").string() +
               " --start 0,0 --goal 1,1") == 1);

  std::ofstream(dir / "bad.json") << R"({"num_worlds": -1, "backend": "oracle"})";
  CHECK(RunCli(out + " --config " + (dir / "bad.json").string() + " bench") == 2);

  const Scenario wall{testing::TwoLinkArm(1.0, 0.8), {GeometryVector::Circle({0.35, 0.0}, 0.1)}};
  SaveScenario(wall, dir / "wall.json");
  const std::string roadmap = (dir / "roadmap.json").string();
  REQUIRE(RunCli(out + " build-roadmap --backend oracle --system sc3 --vertices 120 --scenario " +
                 (dir / "wall.json").string() + " --out " + roadmap) == 0);
  CHECK(RunCli(out + " plan --roadmap " + roadmap + " --start -1.5,0.3 --goal -2.5,1.0") == 0);
  const auto plan = nlohmann::json::parse(ReadFile(dir / "plan.json"));
  CHECK(plan["status"] == "solved");
  CHECK(plan["collision_free"] == true);
  CHECK(RunCli(out + " plan --roadmap " + roadmap + " --start -1.5,0.3 --goal 1.5,-0.3") == 3);
  CHECK(RunCli(out + " plan --roadmap " + roadmap + " --start 1,2,3 --goal 0,0") == 2);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace scdf
