#include "scdf/scenario.hpp"

#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace scdf {

using nlohmann::json;

namespace {

Vec2 ReadVec2(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) {
    throw std::invalid_argument(fmt::format("'{}' must be a 2-vector", what));
  }
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

}  // namespace

json RobotToJson(const RobotModel& robot) {
  json limits = json::array();
  for (const JointLimit& limit : robot.joint_limits) {
    limits.push_back({limit.low, limit.high});
  }
  json j = {{"link_lengths", robot.link_lengths},
            {"link_radius", robot.link_radius},
            {"base_position",
             {robot.base_position.x(), robot.base_position.y()}},
            {"joint_limits", limits}};
  if (robot.tool_radius > 0.0) j["tool_radius"] = robot.tool_radius;
  return j;
}

RobotModel RobotFromJson(const json& j) {
  RobotModel robot;
  robot.link_lengths = j.at("link_lengths").get<std::vector<double>>();
  robot.link_radius = j.at("link_radius").get<double>();
  if (j.contains("base_position")) {
    robot.base_position = ReadVec2(j["base_position"], "base_position");
  }
  for (const json& limit : j.at("joint_limits")) {
    if (!limit.is_array() || limit.size() != 2) {
      throw std::invalid_argument("joint limit must be [low, high]");
    }
    robot.joint_limits.push_back({limit[0].get<double>(), limit[1].get<double>()});
  }
  robot.tool_radius = j.value("tool_radius", 0.0);
  robot.Validate();
  return robot;
}

json ObstacleToJson(const GeometryVector& g) {
  const Vec2 c = g.center();
  if (g.kind == ShapeKind::kCircle) {
    return {{"kind", "circle"}, {"center", {c.x(), c.y()}}, {"radius", g.radius()}};
  }
  const Vec2 h = g.half_extents();
  return {{"kind", "aabb"},
          {"center", {c.x(), c.y()}},
          {"half_extents", {h.x(), h.y()}}};
}

GeometryVector ObstacleFromJson(const json& j) {
  const ShapeKind kind = ParseShapeKind(j.at("kind").get<std::string>());
  const Vec2 center = ReadVec2(j.at("center"), "center");
  GeometryVector g =
      kind == ShapeKind::kCircle
          ? GeometryVector::Circle(center, j.at("radius").get<double>())
          : GeometryVector::Box(center,
                                ReadVec2(j.at("half_extents"), "half_extents"));
  g.Validate();
  return g;
}

json ScenarioToJson(const Scenario& scenario) {
  json obstacles = json::array();
  for (const GeometryVector& g : scenario.obstacles) {
    obstacles.push_back(ObstacleToJson(g));
  }
  return {{"robot", RobotToJson(scenario.robot)}, {"obstacles", obstacles}};
}

Scenario ScenarioFromJson(const json& j) {
  Scenario scenario;
  scenario.robot = RobotFromJson(j.at("robot"));
  if (j.contains("obstacles")) {
    for (const json& o : j["obstacles"]) {
      scenario.obstacles.push_back(ObstacleFromJson(o));
    }
  }
  return scenario;
}

Scenario LoadScenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("scenario " + path.string() + ": " + e.what());
  }
  return ScenarioFromJson(j);
}

void SaveScenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << ScenarioToJson(scenario).dump(2) << "\n";
}

json ConfigToJson(const Config& q) {
  return std::vector<double>(q.data(), q.data() + q.size());
}

Config ConfigFromJson(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

std::uint64_t HashJson(const json& j) {
  const std::string text = j.dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string HexDigest(std::uint64_t value) {
  return fmt::format("{:016x}", value);
}

std::uint64_t StreamSeed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over a combined counter.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace scdf
