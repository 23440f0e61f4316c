#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "woodmon/node_sim.hpp"
#include "woodmon/scenario_file.hpp"
#include "energy_oracle.hpp"

using namespace woodmon::sim;
using woodmon::moisture::EmcParams;
using woodmon::moisture::Environment;
using woodmon::moisture::MoistureContent;

namespace {

constexpr double kEmc23_85 = 17.861215965224569;
constexpr double kLog10ResistanceAt20 = 6.3173946499684786;

ScenarioConfig chamber(double days) {
    ScenarioConfig sc;
    sc.duration_days = days;
    sc.environment = {{0.0, days, Environment{23.0, 0.85}}};
    sc.seed = 1234;
    return sc;
}

}  // namespace

TEST_CASE("true moisture trajectories") {
    CHECK(true_moisture(Constant{7.5}, 17.0, 3.0) == 7.5);
    CHECK(true_moisture(Step{2.0, 6.0, 12.0}, 17.0, 1.99) == 6.0);
    CHECK(true_moisture(Step{2.0, 6.0, 12.0}, 17.0, 2.0) == 12.0);
    for (double t : {0.0, 1.0, 100.0})
        CHECK(true_moisture(FirstOrderApproach{6.0, 0.0}, kEmc23_85, t) == 6.0);
    CHECK(true_moisture(FirstOrderApproach{6.0, 0.1}, kEmc23_85, 0.0) == 6.0);
    CHECK(true_moisture(FirstOrderApproach{6.0, 0.1}, kEmc23_85, 1.0e4) == doctest::Approx(kEmc23_85).epsilon(1e-12));
}

TEST_CASE("battens wet faster than shelves") {
    const FirstOrderApproach batten{6.0, 0.2}, shelf{6.0, 0.1};
    for (double t = 0.01; t < 60.0; t += 0.37)
        REQUIRE(true_moisture(batten, kEmc23_85, t) >= true_moisture(shelf, kEmc23_85, t));
}

TEST_CASE("first-order approach is monotone toward EMC") {
    for (double mc0 : {4.0, 25.0}) {
        double prev = mc0;
        for (double t = 0.1; t < 100.0; t += 0.1) {
            const double v = true_moisture(FirstOrderApproach{mc0, 0.15}, kEmc23_85, t);
            if (mc0 < kEmc23_85) {
                REQUIRE(v >= prev);
                REQUIRE(v <= kEmc23_85);
            } else {
                REQUIRE(v <= prev);
                REQUIRE(v >= kEmc23_85);
            }
            prev = v;
        }
    }
}

TEST_CASE("transduce") {
    Rng rng(1, 1);
    SUBCASE("noise-free transduction is the calibration curve") {
        const auto r = transduce(20.0, NoiseModel{0.0, 2.0}, rng);
        CHECK(std::log10(r.ohms()) == doctest::Approx(kLog10ResistanceAt20).epsilon(1e-14));
    }
    SUBCASE("same seed, same output") {
        Rng a(42, 7), b(42, 7);
        for (int i = 0; i < 100; ++i)
            REQUIRE(transduce(12.0, NoiseModel{0.05, 2.0}, a).ohms() == transduce(12.0, NoiseModel{0.05, 2.0}, b).ohms());
        Rng c(42, 8);
        CHECK(transduce(12.0, NoiseModel{0.05, 2.0}, c).ohms() != transduce(12.0, NoiseModel{0.05, 2.0}, a).ohms());
    }
    SUBCASE("noise widens above 20 %") {
        const NoiseModel noise{0.05, 2.0};
        const double center = std::log10(woodmon::moisture::moisture_to_resistance(MoistureContent(25.0)).ohms());
        std::vector<double> draws;
        for (int i = 0; i < 10000; ++i)
            draws.push_back(std::log10(transduce(25.0, noise, rng).ohms()));
        const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / draws.size();
        double ss = 0.0;
        for (double d : draws)
            ss += (d - mean) * (d - mean);
        const double sd = std::sqrt(ss / (draws.size() - 1));
        CHECK(sd == doctest::Approx(0.10).epsilon(0.10));
        CHECK(mean == doctest::Approx(center).epsilon(1e-3));

        draws.clear();
        for (int i = 0; i < 10000; ++i)
            draws.push_back(std::log10(transduce(15.0, noise, rng).ohms()));
        const double mean15 = std::accumulate(draws.begin(), draws.end(), 0.0) / draws.size();
        ss = 0.0;
        for (double d : draws)
            ss += (d - mean15) * (d - mean15);
        CHECK(std::sqrt(ss / (draws.size() - 1)) == doctest::Approx(0.05).epsilon(0.10));
    }
}

TEST_CASE("lossless run counts frames exactly") {
    NodeConfig node;
    std::vector<woodmon::protocol::Frame> seen;
    const auto report = run_scenario({node}, chamber(10.0), [&](const auto& f, auto) { seen.push_back(f); });
    CHECK(report.frames_emitted == 20);
    CHECK(report.frames_delivered == 20);
    CHECK(report.frames_lost == 0);
    REQUIRE(seen.size() == 20);
    for (std::size_t i = 0; i < seen.size(); ++i) {
        CHECK(seen[i].seq == i);
        CHECK(seen[i].timestamp == i * 43200);
        CHECK(seen[i].channels.size() == 10);
        CHECK(seen[i].temp_centi_c == 2300);
        CHECK(seen[i].rh_permille == 850);
    }
}

TEST_CASE("dead link delivers nothing") {
    NodeConfig node;
    node.radio_loss_prob = 1.0;
    node.retransmit_limit = 0;
    int delivered = 0;
    const auto report = run_scenario({node}, chamber(10.0), [&](const auto&, auto) { ++delivered; });
    CHECK(report.frames_delivered == 0);
    CHECK(report.frames_lost == 20);
    CHECK(delivered == 0);

    node.retransmit_limit = 3;
    const auto retried = run_scenario({node}, chamber(10.0), nullptr);
    CHECK(retried.nodes[0].tx_attempts == 80);
    CHECK(retried.frames_lost == 20);
}

TEST_CASE("default energy budget meets five years and matches the closed form") {
    NodeConfig node;  // 2600 mAh, 5 uA, 50 mC, 30 mC, 2/day
    const auto report = run_scenario({node}, chamber(365.0), nullptr);
    const double closed = woodmon::test::closed_form_lifetime_days(node);
    CHECK(report.projected_lifetime_days >= 1826.0);
    CHECK(std::abs(report.projected_lifetime_days - closed) / closed < 0.01);
}

TEST_CASE("energy ledger balances exactly") {
    NodeConfig node;
    node.radio_loss_prob = 0.3;
    node.retransmit_limit = 2;
    node.sleep_current_ua = 3.7;
    const auto report = run_scenario({node}, chamber(50.0), nullptr);
    const auto& n = report.nodes.at(0);
    CHECK(n.measure_uc == static_cast<std::int64_t>(n.measurements) * 50'000);
    CHECK(n.tx_uc == static_cast<std::int64_t>(n.tx_attempts) * 30'000);
    CHECK(n.sleep_uc == std::llround(3.7 * 50 * 86400));
    const auto remaining = std::llround(n.battery_remaining_fraction * static_cast<double>(n.capacity_uc));
    CHECK(n.capacity_uc - n.consumed_uc() == remaining);
    CHECK(n.frames_delivered + n.frames_lost == n.frames_emitted);
}

TEST_CASE("battery exhaustion silences the node without failing the run") {
    NodeConfig node;
    node.battery_capacity_mah = 1.0;  // 3.6 C
    int delivered = 0;
    const auto report = run_scenario({node}, chamber(60.0), [&](const auto&, auto) { ++delivered; });
    const auto& n = report.nodes.at(0);
    REQUIRE(n.death_day.has_value());
    CHECK(n.battery_remaining_fraction >= 0.0);
    CHECK(n.battery_remaining_fraction < 0.05);
    CHECK(report.projected_lifetime_days == *n.death_day);
    // Consumption per day is 0.592 C, so the closed form puts death near day 6.
    CHECK(*n.death_day == doctest::Approx(woodmon::test::closed_form_lifetime_days(node)).epsilon(0.1));
    CHECK(delivered == static_cast<int>(n.frames_delivered));
    CHECK(n.frames_delivered < 20);
}

TEST_CASE("battery fraction never increases between frames") {
    NodeConfig node;
    node.battery_capacity_mah = 5.0;
    std::uint16_t prev = UINT16_MAX;
    run_scenario({node}, chamber(30.0), [&](const auto& f, auto) {
        REQUIRE(f.battery_mv <= prev);
        prev = f.battery_mv;
    });
}

TEST_CASE("loss statistics") {
    NodeConfig node;
    node.radio_loss_prob = 0.2;
    node.channel_count = 1;
    const auto report = run_scenario({node}, chamber(5000.0), nullptr);
    REQUIRE(report.frames_emitted == 10000);
    const double ratio = static_cast<double>(report.frames_delivered) / report.frames_emitted;
    const double se = std::sqrt(0.2 * 0.8 / report.frames_emitted);
    CHECK(std::abs(ratio - 0.8) < 3.0 * se);
}

TEST_CASE("runs are deterministic per seed") {
    ScenarioConfig sc = chamber(20.0);
    sc.noise = {0.02, 2.0};
    sc.trajectories[1] = {FirstOrderApproach{6.0, 0.2}, FirstOrderApproach{6.0, 0.1}};
    NodeConfig a;
    a.radio_loss_prob = 0.25;
    a.retransmit_limit = 1;
    NodeConfig b = a;
    b.node_id = 2;

    auto capture = [&](const ScenarioConfig& s) {
        std::vector<std::uint8_t> stream;
        run_scenario({a, b}, s, [&](const auto&, auto bytes) { stream.insert(stream.end(), bytes.begin(), bytes.end()); });
        return stream;
    };
    const auto first = capture(sc);
    CHECK(first == capture(sc));
    sc.seed += 1;
    CHECK(first != capture(sc));
}

TEST_CASE("config errors") {
    NodeConfig node;
    auto sc = chamber(10.0);
    node.channel_count = 11;
    CHECK_THROWS_AS(run_scenario({node}, sc, nullptr), ConfigError);
    node = NodeConfig{};
    node.schedule_per_day = 0;
    CHECK_THROWS_AS(run_scenario({node}, sc, nullptr), ConfigError);
    node = NodeConfig{};
    CHECK_THROWS_AS(run_scenario({node, node}, sc, nullptr), ConfigError);
    sc.environment = {{0.0, 5.0, Environment{23.0, 0.85}}};
    CHECK_THROWS_AS(run_scenario({node}, sc, nullptr), ConfigError);
    sc = chamber(10.0);
    sc.environment[0].env.relative_humidity = 1.2;
    CHECK_THROWS_AS(run_scenario({node}, sc, nullptr), ConfigError);
    sc = chamber(10.0);
    sc.trajectories[1] = {FirstOrderApproach{6.0, -1.0}};
    CHECK_THROWS_AS(run_scenario({node}, sc, nullptr), ConfigError);
    CHECK_THROWS_AS(run_scenario({}, chamber(1.0), nullptr), ConfigError);
}

TEST_CASE("environment timeline switches EMC") {
    ScenarioConfig sc;
    sc.duration_days = 4.0;
    sc.environment = {{0.0, 2.0, Environment{20.0, 0.65}}, {2.0, 4.0, Environment{23.0, 0.85}}};
    NodeConfig node;
    node.channel_count = 1;
    std::vector<std::int16_t> temps;
    run_scenario({node}, sc, [&](const auto& f, auto) { temps.push_back(f.temp_centi_c); });
    CHECK(temps == std::vector<std::int16_t>{2000, 2000, 2000, 2000, 2300, 2300, 2300, 2300});
}

TEST_CASE("scenario files") {
    const std::string good = R"({
        "schema_version": 1, "duration_days": 10, "seed": 9, "start_time": 1000,
        "noise": {"sigma_log10r": 0.01, "high_mc_factor": 2},
        "environment": [{"from_day": 0, "to_day": 10, "temperature_c": 23, "rh": 0.85}],
        "nodes": [{"node_id": 4, "channel_count": 2,
                   "channels": [{"type": "first_order", "mc0": 6, "rate_per_day": 0.1},
                                {"type": "step", "at_day": 3, "from": 6, "to": 8}]}]
    })";
    const auto file = parse_scenario(good);
    REQUIRE(file.nodes.size() == 1);
    CHECK(file.nodes[0].node_id == 4);
    CHECK(file.nodes[0].schedule_per_day == 2);
    CHECK(file.scenario.start_time == 1000);
    CHECK(file.scenario.trajectories.at(4).size() == 2);
    CHECK(std::holds_alternative<Step>(file.scenario.trajectories.at(4)[1]));

    CHECK_THROWS_AS(parse_scenario("{"), ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"({"schema_version": 2})"), ConfigError);
    std::string typo = good;
    typo.replace(typo.find("\"seed\""), 6, "\"sead\"");
    CHECK_THROWS_AS(parse_scenario(typo), ConfigError);
    std::string bad_type = good;
    bad_type.replace(bad_type.find("\"first_order\""), 13, "\"linear\"");
    CHECK_THROWS_AS(parse_scenario(bad_type), ConfigError);
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ConfigError);
}
