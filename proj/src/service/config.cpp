#include "woodmon/service/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iterator>

namespace woodmon::service {

namespace {

using stability::ConfigError;
using json::field;
using json::field_or;

void set_listen(ServiceConfig& cfg, const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0)
        throw ConfigError("listen must be host:port, got '" + text + "'");
    int port = 0;
    const char* first = text.data() + colon + 1;
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, port);
    if (ec != std::errc{} || ptr != last || port < 0 || port > 65535)
        throw ConfigError("listen port invalid in '" + text + "'");
    cfg.host = text.substr(0, colon);
    cfg.port = port;
}

void apply_env(ServiceConfig& cfg, const EnvLookup& env) {
    if (const auto v = env("WOODMON_LISTEN"))
        set_listen(cfg, *v);
    if (const auto v = env("WOODMON_DATA_DIR"))
        cfg.service.data_dir = *v;
    if (const auto v = env("WOODMON_STATIC_DIR"))
        cfg.static_dir = *v;
    if (const auto v = env("WOODMON_STABLE_TOLERANCE")) {
        try {
            std::size_t used = 0;
            cfg.service.stable_tolerance = std::stod(*v, &used);
            if (used != v->size())
                throw std::invalid_argument(*v);
        } catch (const std::exception&) {
            throw ConfigError("WOODMON_STABLE_TOLERANCE is not a number: '" + *v + "'");
        }
    }
    if (!(cfg.service.stable_tolerance >= 0.0))
        throw ConfigError("stable_tolerance must be non-negative");
}

}  // namespace

std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str()))
        return std::string(v);
    return std::nullopt;
}

ServiceConfig parse_config(const std::string& text, const EnvLookup& env) {
    ServiceConfig cfg;
    cfg.service.data_dir = "woodmon-data";
    try {
        const auto j = json::Json::parse(text);
        const std::string where = "config";
        json::expect_keys(j,
                          {"listen", "data_dir", "static_dir", "emc_params", "correction", "stable_tolerance",
                           "default_rules", "clock"},
                          where);
        if (j.contains("listen"))
            set_listen(cfg, field<std::string>(j, "listen", where));
        cfg.service.data_dir = field_or<std::string>(j, "data_dir", cfg.service.data_dir.string(), where);
        if (j.contains("static_dir"))
            cfg.static_dir = field<std::string>(j, "static_dir", where);
        if (j.contains("emc_params"))
            cfg.service.emc = json::emc_params_from_json(j.at("emc_params"));
        if (j.contains("correction"))
            cfg.service.correction = json::correction_from_json(j.at("correction"));
        cfg.service.stable_tolerance =
            field_or<double>(j, "stable_tolerance", cfg.service.stable_tolerance, where);
        if (j.contains("default_rules")) {
            const auto& d = j.at("default_rules");
            json::expect_keys(d, {"floor_covering", "structural"}, "default_rules");
            if (d.contains("floor_covering"))
                cfg.service.default_rules.floor_covering = json::alarm_rule_from_json(d.at("floor_covering"));
            if (d.contains("structural"))
                cfg.service.default_rules.structural = json::alarm_rule_from_json(d.at("structural"));
        }
        const auto clock = field_or<std::string>(j, "clock", "wall", where);
        if (clock != "wall" && clock != "frames")
            throw ConfigError("clock must be 'wall' or 'frames'");
        cfg.service.clock_from_frames = clock == "frames";
        cfg.service.emc.validate();
    } catch (const json::Json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const json::SchemaError& e) {
        throw ConfigError(e.what());
    } catch (const moisture::DomainError& e) {
        throw ConfigError(e.what());
    }
    apply_env(cfg, env);
    return cfg;
}

ServiceConfig load_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env) {
    if (!path)
        return parse_config("{}", env);
    std::ifstream in(*path);
    if (!in)
        throw ConfigError("cannot read config " + path->string());
    return parse_config(std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()), env);
}

}  // namespace woodmon::service
