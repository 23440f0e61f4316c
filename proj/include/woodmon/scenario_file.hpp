#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "woodmon/node_sim.hpp"

namespace woodmon::sim {

inline constexpr int kScenarioSchemaVersion = 1;

struct ScenarioFile {
    std::vector<NodeConfig> nodes;
    ScenarioConfig scenario;
};

// Parses and validates a scenario document (JSON, see docs/scenario-schema.md).
// Every problem surfaces as ConfigError.
ScenarioFile parse_scenario(const std::string& text);
ScenarioFile load_scenario(const std::filesystem::path& path);

}  // namespace woodmon::sim
