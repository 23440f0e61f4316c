#include "woodmon/scenario_file.hpp"

#include <fstream>
#include <sstream>

#include "woodmon/json_core.hpp"

namespace woodmon::sim {

namespace {

using json::Json;
using json::field;
using json::field_or;

Trajectory trajectory_from(const Json& j) {
    const std::string where = "channel trajectory";
    const auto type = field<std::string>(j, "type", where);
    if (type == "constant") {
        json::expect_keys(j, {"type", "mc"}, where);
        return Constant{field<double>(j, "mc", where)};
    }
    if (type == "step") {
        json::expect_keys(j, {"type", "at_day", "from", "to"}, where);
        return Step{field<double>(j, "at_day", where), field<double>(j, "from", where), field<double>(j, "to", where)};
    }
    if (type == "first_order") {
        json::expect_keys(j, {"type", "mc0", "rate_per_day"}, where);
        return FirstOrderApproach{field<double>(j, "mc0", where), field<double>(j, "rate_per_day", where)};
    }
    throw json::SchemaError(where + ": unknown type '" + type + "'");
}

NodeConfig node_from(const Json& j, std::vector<Trajectory>& trajectories) {
    const std::string where = "node";
    json::expect_keys(j,
                      {"node_id", "channel_count", "schedule_per_day", "battery_capacity_mah", "sleep_current_ua",
                       "measure_cost_mc", "tx_cost_mc", "radio_loss_prob", "retransmit_limit", "channels"},
                      where);
    NodeConfig n;
    n.node_id = field<std::uint32_t>(j, "node_id", where);
    n.channel_count = field_or<int>(j, "channel_count", n.channel_count, where);
    n.schedule_per_day = field_or<int>(j, "schedule_per_day", n.schedule_per_day, where);
    n.battery_capacity_mah = field_or<double>(j, "battery_capacity_mah", n.battery_capacity_mah, where);
    n.sleep_current_ua = field_or<double>(j, "sleep_current_ua", n.sleep_current_ua, where);
    n.measure_cost_mc = field_or<double>(j, "measure_cost_mc", n.measure_cost_mc, where);
    n.tx_cost_mc = field_or<double>(j, "tx_cost_mc", n.tx_cost_mc, where);
    n.radio_loss_prob = field_or<double>(j, "radio_loss_prob", n.radio_loss_prob, where);
    n.retransmit_limit = field_or<int>(j, "retransmit_limit", n.retransmit_limit, where);
    if (j.contains("channels")) {
        if (!j.at("channels").is_array())
            throw json::SchemaError(where + ": 'channels' must be an array");
        for (const auto& c : j.at("channels"))
            trajectories.push_back(trajectory_from(c));
    }
    return n;
}

}  // namespace

ScenarioFile parse_scenario(const std::string& text) {
    try {
        const Json doc = Json::parse(text);
        const std::string where = "scenario";
        json::expect_keys(doc,
                          {"schema_version", "duration_days", "start_time", "seed", "noise", "emc_params",
                           "environment", "nodes"},
                          where);
        const int version = field<int>(doc, "schema_version", where);
        if (version != kScenarioSchemaVersion)
            throw ConfigError("unsupported scenario schema_version " + std::to_string(version));

        ScenarioFile out;
        ScenarioConfig& sc = out.scenario;
        sc.duration_days = field<double>(doc, "duration_days", where);
        sc.start_time = field_or<std::uint64_t>(doc, "start_time", 0, where);
        sc.seed = field_or<std::uint64_t>(doc, "seed", 0, where);
        if (doc.contains("noise")) {
            const Json& nz = doc.at("noise");
            json::expect_keys(nz, {"sigma_log10r", "high_mc_factor"}, "noise");
            sc.noise.sigma_log10r = field_or<double>(nz, "sigma_log10r", 0.0, "noise");
            sc.noise.high_mc_factor = field_or<double>(nz, "high_mc_factor", 2.0, "noise");
        }
        if (doc.contains("emc_params"))
            sc.emc = json::emc_params_from_json(doc.at("emc_params"));

        if (!doc.contains("environment") || !doc.at("environment").is_array())
            throw ConfigError("scenario: 'environment' must be an array of segments");
        for (const auto& seg : doc.at("environment")) {
            json::expect_keys(seg, {"from_day", "to_day", "temperature_c", "rh"}, "environment segment");
            EnvironmentSegment s;
            s.from_day = field<double>(seg, "from_day", "environment segment");
            s.to_day = field<double>(seg, "to_day", "environment segment");
            s.env.temperature_c = field<double>(seg, "temperature_c", "environment segment");
            s.env.relative_humidity = field<double>(seg, "rh", "environment segment");
            sc.environment.push_back(s);
        }

        if (!doc.contains("nodes") || !doc.at("nodes").is_array())
            throw ConfigError("scenario: 'nodes' must be an array");
        for (const auto& nj : doc.at("nodes")) {
            std::vector<Trajectory> trajs;
            NodeConfig n = node_from(nj, trajs);
            if (!trajs.empty())
                sc.trajectories[n.node_id] = std::move(trajs);
            out.nodes.push_back(n);
        }
        if (out.nodes.empty())
            throw ConfigError("scenario: no nodes");

        sc.validate();
        for (const auto& n : out.nodes)
            n.validate();
        return out;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
    } catch (const json::SchemaError& e) {
        throw ConfigError(e.what());
    }
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open scenario file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

}  // namespace woodmon::sim
