// woodmon: conversions, stability checks, simulation, service hosting, replay.
// Exit codes: 0 success, 1 domain or runtime error, 2 usage error.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "woodmon/json_core.hpp"
#include "woodmon/moisture.hpp"
#include "woodmon/node_sim.hpp"
#include "woodmon/scenario_file.hpp"
#include "woodmon/service/config.hpp"
#include "woodmon/service/http_api.hpp"
#include "woodmon/service/replay.hpp"
#include "woodmon/stability.hpp"

using namespace woodmon;
using json::Json;

namespace {

constexpr int kOk = 0;
constexpr int kDomain = 1;
constexpr int kUsage = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

void add_format(CLI::App* cmd, std::string& format) {
    cmd->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"plain", "records"}))
        ->default_val("plain");
}

// ---- convert ---------------------------------------------------------------

struct ConvertArgs {
    std::optional<double> resistance;
    std::optional<double> moisture;
    std::string format = "plain";
};

int run_convert(const ConvertArgs& a) {
    moisture::Resistance r(1.0e6);
    moisture::MoistureContent m(0.0);
    if (a.resistance) {
        r = moisture::Resistance(*a.resistance);
        m = moisture::resistance_to_moisture(r);
    } else {
        m = moisture::MoistureContent(*a.moisture);
        r = moisture::moisture_to_resistance(m);
    }
    if (m.saturated())
        std::cerr << "note: above fibre saturation (25 %), value is indicative only\n";
    if (a.format == "records") {
        std::cout << Json{{"resistance_ohms", r.ohms()},
                          {"log10r_milli", protocol::to_log10r_milli(r.ohms())},
                          {"moisture_percent", m.percent()},
                          {"saturated", m.saturated()}}
                         .dump()
                  << '\n';
    } else if (a.resistance) {
        std::cout << fmt("%.2f", m.percent()) << " %\n";
    } else {
        std::cout << fmt("%.4g", r.ohms()) << " ohm\n";
    }
    return kOk;
}

// ---- emc -------------------------------------------------------------------

struct EmcArgs {
    double temperature = 20.0;
    double rh = 0.65;
    std::optional<double> current;
    std::string format = "plain";
};

int run_emc(const EmcArgs& a) {
    const moisture::Environment env{a.temperature, a.rh};
    const auto params = moisture::EmcParams::wood_handbook();
    const auto emc = moisture::equilibrium_moisture(env, params);
    Json rec = {{"temperature_c", a.temperature}, {"relative_humidity", a.rh}, {"emc_percent", emc.percent()}};
    std::string tendency_line;
    if (a.current) {
        const auto t = moisture::tendency(moisture::MoistureContent(*a.current), env, params);
        rec["current_percent"] = *a.current;
        rec["direction"] = moisture::to_string(t.direction);
        rec["magnitude_points"] = t.magnitude;
        tendency_line = moisture::to_string(t.direction) + " " + fmt("%+.1f", t.magnitude);
    }
    if (a.format == "records") {
        std::cout << rec.dump() << '\n';
    } else {
        std::cout << "EMC " << fmt("%.1f", emc.percent()) << " %\n";
        if (!tendency_line.empty())
            std::cout << tendency_line << '\n';
    }
    return kOk;
}

// ---- check -----------------------------------------------------------------

struct CheckArgs {
    double width = 0.0;
    double length = 400.0;
    double thickness = 14.0;
    double curl = 0.0;
    std::optional<double> mc;
    std::string format = "plain";
};

int run_check(const CheckArgs& a) {
    const stability::ParquetSpec spec{a.width, a.length, a.thickness};
    const auto curl = stability::check_curl(spec, {a.curl, 0.0, a.mc.value_or(0.0)});
    bool failed = curl.verdict == stability::Verdict::Fail;
    Json rec = {{"curl", {{"verdict", stability::to_string(curl.verdict)},
                          {"limit_mm", curl.limit_mm},
                          {"curl_mm", curl.curl_mm}}}};
    std::string window_line;
    if (a.mc) {
        const auto v = stability::check_installation_window(moisture::MoistureContent(*a.mc));
        failed = failed || v == stability::Verdict::Fail;
        rec["installation_window"] = {{"verdict", stability::to_string(v)},
                                      {"moisture_percent", *a.mc},
                                      {"min_percent", stability::kInstallationMinPercent},
                                      {"max_percent", stability::kInstallationMaxPercent}};
        window_line = "installation_window " + stability::to_string(v) + " " + fmt("%.2f", *a.mc) + " % (window " +
                      fmt("%.0f", stability::kInstallationMinPercent) + "-" +
                      fmt("%.0f", stability::kInstallationMaxPercent) + " %)";
    }
    if (a.format == "records") {
        std::cout << rec.dump() << '\n';
    } else {
        std::cout << "curl " << stability::to_string(curl.verdict) << " " << fmt("%.3f", curl.curl_mm) << " mm (limit "
                  << fmt("%.3f", curl.limit_mm) << " mm)\n";
        if (!window_line.empty())
            std::cout << window_line << '\n';
    }
    return failed ? kDomain : kOk;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
    std::string scenario;
    std::string out;
    std::string post;
    std::string format = "plain";
};

Json report_json(const sim::SimReport& r) {
    Json nodes = Json::array();
    for (const auto& n : r.nodes)
        nodes.push_back({{"node_id", n.node_id},
                         {"frames_emitted", n.frames_emitted},
                         {"frames_delivered", n.frames_delivered},
                         {"frames_lost", n.frames_lost},
                         {"tx_attempts", n.tx_attempts},
                         {"battery_remaining_fraction", n.battery_remaining_fraction},
                         {"projected_lifetime_days", n.projected_lifetime_days},
                         {"death_day", n.death_day ? Json(*n.death_day) : Json(nullptr)}});
    return {{"frames_emitted", r.frames_emitted},
            {"frames_delivered", r.frames_delivered},
            {"frames_lost", r.frames_lost},
            {"battery_remaining_fraction", r.battery_remaining_fraction},
            {"projected_lifetime_days", r.projected_lifetime_days},
            {"nodes", nodes}};
}

int run_simulate(const SimulateArgs& a) {
    sim::ScenarioFile file;
    try {
        file = sim::load_scenario(a.scenario);
    } catch (const stability::ConfigError& e) {
        throw UsageError(e.what());
    }

    std::ofstream out;
    if (!a.out.empty()) {
        out.open(a.out, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + a.out);
    }
    std::optional<httplib::Client> client;
    if (!a.post.empty()) {
        client.emplace(a.post);
        if (!client->is_valid())
            throw UsageError("--post: invalid URL " + a.post);
        client->set_connection_timeout(5, 0);
    }

    std::uint64_t posted = 0, post_failed = 0;
    std::string post_error;
    const auto report = sim::run_scenario(file.nodes, file.scenario, [&](const protocol::Frame& f, auto bytes) {
        if (out.is_open()) {
            if (a.format == "records")
                out << json::to_json(f).dump() << '\n';
            else
                out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        }
        if (client) {
            const auto res = client->Post(std::string(service::kApiPrefix) + "/frames",
                                          reinterpret_cast<const char*>(bytes.data()), bytes.size(),
                                          "application/octet-stream");
            if (res && res->status / 100 == 2) {
                ++posted;
            } else {
                ++post_failed;
                if (post_error.empty())
                    post_error = res ? "HTTP " + std::to_string(res->status) + " " + res->body
                                     : httplib::to_string(res.error());
            }
        }
    });
    if (out.is_open() && !out.flush())
        throw std::runtime_error("write to " + a.out + " failed");

    Json rec = report_json(report);
    if (client) {
        rec["posted"] = posted;
        rec["post_failed"] = post_failed;
    }
    if (a.format == "records") {
        std::cout << rec.dump() << '\n';
    } else {
        std::cout << "frames_emitted " << report.frames_emitted << '\n'
                  << "frames_delivered " << report.frames_delivered << '\n'
                  << "frames_lost " << report.frames_lost << '\n'
                  << "battery_remaining_fraction " << fmt("%.6f", report.battery_remaining_fraction) << '\n'
                  << "projected_lifetime_days " << fmt("%.1f", report.projected_lifetime_days) << '\n';
        if (client)
            std::cout << "posted " << posted << '\n' << "post_failed " << post_failed << '\n';
    }
    if (post_failed > 0) {
        std::cerr << "error: " << post_failed << " frame(s) not accepted by " << a.post << ": " << post_error << '\n';
        return kDomain;
    }
    return kOk;
}

// ---- serve -----------------------------------------------------------------

httplib::Server* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server)
        g_server->stop();
}

int run_serve(const std::string& config_path) {
    service::ServiceConfig cfg;
    try {
        cfg = service::load_config(config_path.empty() ? std::nullopt
                                                       : std::optional<std::filesystem::path>(config_path));
    } catch (const stability::ConfigError& e) {
        throw UsageError(e.what());
    }
    service::Service svc(cfg.service);
    httplib::Server server;
    // The library default adds SO_REUSEPORT, which would let a second
    // instance share an occupied port instead of failing.
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    service::install_routes(server, svc, {cfg.static_dir});

    int port = cfg.port;
    if (port == 0) {
        port = server.bind_to_any_port(cfg.host);
        if (port < 0)
            port = 0;
    } else if (!server.bind_to_port(cfg.host, port)) {
        port = 0;
    }
    if (port == 0) {
        std::cerr << "error: cannot listen on " << cfg.host << ":" << cfg.port << '\n';
        return kDomain;
    }
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "listening on " << cfg.host << ":" << port << " data_dir " << cfg.service.data_dir.string()
              << std::endl;
    const bool ok = server.listen_after_bind();
    g_server = nullptr;
    return ok ? kOk : kDomain;
}

// ---- replay ----------------------------------------------------------------

struct ReplayArgs {
    std::string log;
    std::string into;
    std::string model;
    std::string config;
    std::string format = "plain";
};

int run_replay(const ReplayArgs& a) {
    service::ServiceConfig cfg;
    std::optional<service::SiteModel> model;
    try {
        cfg = service::load_config(a.config.empty() ? std::nullopt : std::optional<std::filesystem::path>(a.config));
        if (!a.model.empty()) {
            std::ifstream in(a.model);
            model = service::SiteModel::from_snapshot(Json::parse(in), cfg.service.default_rules);
        }
    } catch (const stability::ConfigError& e) {
        throw UsageError(e.what());
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--model: ") + e.what());
    } catch (const Json::exception& e) {
        throw UsageError(std::string("--model: ") + e.what());
    }
    cfg.service.data_dir = a.into;
    cfg.service.clock_from_frames = true;
    service::Service svc(cfg.service);
    if (model)
        svc.edit_model([&](service::SiteModel& m) { m = *model; });

    const auto stats = service::replay_file(svc, a.log);
    Json report = service::state_report(svc);
    if (a.format == "records") {
        report["replay"] = service::to_json(stats);
        std::cout << report.dump(2) << '\n';
        return kOk;
    }
    std::cout << "frames_read " << stats.frames_read << '\n'
              << "accepted " << stats.accepted << '\n'
              << "duplicates " << stats.duplicates << '\n'
              << "rejected " << stats.rejected << '\n'
              << "readings " << report.at("readings").get<std::uint64_t>() << '\n';
    for (const auto& alarm : report.at("alarms"))
        std::cout << "alarm " << alarm.at("id").get<std::string>() << " " << alarm.at("state").get<std::string>()
                  << " raised " << alarm.at("raised_at").get<std::string>() << '\n';
    for (const auto& z : report.at("zones"))
        if (!z.at("tendency").is_null())
            std::cout << "tendency zone " << z.at("zone_id") << " " << z.at("tendency").at("direction").get<std::string>()
                      << " " << fmt("%+.2f", z.at("tendency").at("magnitude_points").get<double>()) << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wood moisture monitoring toolkit"};
    app.require_subcommand(1);

    ConvertArgs convert;
    auto* c = app.add_subcommand("convert", "Convert between resistance (ohm) and moisture content (%)");
    auto* from = c->add_option_group("input");
    from->add_option("--resistance", convert.resistance, "Resistance in ohms");
    from->add_option("--moisture", convert.moisture, "Moisture content in percent");
    from->require_option(1);
    add_format(c, convert.format);

    EmcArgs emc;
    auto* e = app.add_subcommand("emc", "Equilibrium moisture content and tendency");
    e->add_option("--temp", emc.temperature, "Air temperature, degC")->required()->check(CLI::Range(-10.0, 60.0));
    e->add_option("--rh", emc.rh, "Relative humidity as a fraction")->required()->check(CLI::Range(0.0, 1.0));
    e->add_option("--current", emc.current, "Current moisture content, %")->check(CLI::Range(0.0, 60.0));
    add_format(e, emc.format);

    CheckArgs check;
    auto* k = app.add_subcommand("check", "Parquet curl and installation-window verdicts");
    k->add_option("--width", check.width, "Board width, mm")->required()->check(CLI::PositiveNumber);
    k->add_option("--curl", check.curl, "Measured curl, mm")->required()->check(CLI::NonNegativeNumber);
    k->add_option("--length", check.length, "Board length, mm")->check(CLI::PositiveNumber)->capture_default_str();
    k->add_option("--thickness", check.thickness, "Board thickness, mm")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    k->add_option("--mc", check.mc, "Moisture content, %")->check(CLI::Range(0.0, 60.0));
    add_format(k, check.format);

    SimulateArgs simulate;
    auto* s = app.add_subcommand("simulate", "Run a node scenario and emit frames");
    s->add_option("--scenario", simulate.scenario, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
    auto* out_opt = s->add_option("--out", simulate.out, "Write frames here (binary, or text lines with --format records)");
    auto* post_opt = s->add_option("--post", simulate.post, "POST each frame to a running service, e.g. http://127.0.0.1:8080");
    out_opt->excludes(post_opt);
    add_format(s, simulate.format);

    std::string serve_config;
    auto* v = app.add_subcommand("serve", "Run the ingest service");
    v->add_option("--config", serve_config, "Service config file (JSON)")->check(CLI::ExistingFile);

    ReplayArgs replay;
    auto* r = app.add_subcommand("replay", "Rebuild service state from a frame log");
    r->add_option("--log", replay.log, "Frame log: binary frames or text-frame lines")
        ->required()
        ->check(CLI::ExistingFile);
    r->add_option("--into", replay.into, "Data directory to build")->required();
    r->add_option("--model", replay.model, "Model snapshot to install first")->check(CLI::ExistingFile);
    r->add_option("--config", replay.config, "Service config for conversion parameters")->check(CLI::ExistingFile);
    add_format(r, replay.format);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        return app.exit(err) == 0 ? kOk : kUsage;
    }

    try {
        if (*c)
            return run_convert(convert);
        if (*e)
            return run_emc(emc);
        if (*k)
            return run_check(check);
        if (*s)
            return run_simulate(simulate);
        if (*v)
            return run_serve(serve_config);
        if (*r)
            return run_replay(replay);
    } catch (const UsageError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kUsage;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kDomain;
    }
    return kUsage;
}
