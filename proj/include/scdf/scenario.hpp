#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "scdf/geometry.hpp"

namespace scdf {

struct Scenario {
  RobotModel robot;
  ObstacleSet obstacles;
};

nlohmann::json RobotToJson(const RobotModel& robot);
RobotModel RobotFromJson(const nlohmann::json& j);
nlohmann::json ObstacleToJson(const GeometryVector& g);
GeometryVector ObstacleFromJson(const nlohmann::json& j);
nlohmann::json ScenarioToJson(const Scenario& scenario);
// Validates the robot and every obstacle; throws std::invalid_argument.
Scenario ScenarioFromJson(const nlohmann::json& j);

Scenario LoadScenario(const std::filesystem::path& path);
void SaveScenario(const Scenario& scenario, const std::filesystem::path& path);

nlohmann::json ConfigToJson(const Config& q);
Config ConfigFromJson(const nlohmann::json& j);

// FNV-1a over the canonical JSON dump.
std::uint64_t HashJson(const nlohmann::json& j);
std::string HexDigest(std::uint64_t value);

// Independent deterministic stream seeds derived from (seed, index).
std::uint64_t StreamSeed(std::uint64_t seed, std::uint64_t index);

}  // namespace scdf
