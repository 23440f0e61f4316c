#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "woodmon/service/service.hpp"

namespace woodmon::service {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::filesystem::path> static_dir;  // served at "/" when set
    ServiceOptions service;
};

// Env lookup; returns nullopt for unset variables.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> process_env(const std::string& name);

// Reads the JSON config (if `path` is given) and then applies WOODMON_LISTEN
// ("host:port"), WOODMON_DATA_DIR, WOODMON_STATIC_DIR and
// WOODMON_STABLE_TOLERANCE. Throws stability::ConfigError on any bad value.
ServiceConfig load_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env = process_env);

ServiceConfig parse_config(const std::string& text, const EnvLookup& env = process_env);

}  // namespace woodmon::service
