#include "woodmon/node_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <random>

namespace woodmon::sim {

namespace {

constexpr double kUcPerMah = 3.6e6;
constexpr double kUcPerMc = 1.0e3;
constexpr double kHighMcNoiseAbove = 20.0;
constexpr double kFullBatteryMv = 3000.0;
constexpr double kEmptyBatteryMv = 2000.0;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& msg) {
    if (!ok)
        throw ConfigError(msg);
}

void validate_trajectory(const Trajectory& traj) {
    std::visit(Overloaded{
                   [](const Constant& c) { require(c.mc > 0.0 && c.mc < 60.0, "constant trajectory outside (0,60) %"); },
                   [](const Step& s) {
                       require(s.at_day >= 0.0, "step time must be >= 0");
                       require(s.from > 0.0 && s.from < 60.0 && s.to > 0.0 && s.to < 60.0,
                               "step trajectory outside (0,60) %");
                   },
                   [](const FirstOrderApproach& f) {
                       require(f.mc0 > 0.0 && f.mc0 < 60.0, "first-order trajectory start outside (0,60) %");
                       require(f.rate_per_day >= 0.0 && std::isfinite(f.rate_per_day), "rates must be >= 0");
                   },
               },
               traj);
}

struct NodeState {
    const NodeConfig* cfg = nullptr;
    NodeReport report;
    std::int64_t remaining_uc = 0;
    std::int64_t measure_cost_uc = 0;
    std::int64_t tx_cost_uc = 0;
    std::uint64_t last_s = 0;
    std::uint64_t epoch = 0;
    std::uint16_t seq = 0;
    bool alive = true;
    Rng noise_rng;
    Rng radio_rng;

    NodeState(const NodeConfig& c, std::uint64_t seed)
        : cfg(&c),
          noise_rng(seed, std::uint64_t{c.node_id} * 2),
          radio_rng(seed, std::uint64_t{c.node_id} * 2 + 1) {
        report.node_id = c.node_id;
        report.capacity_uc = std::llround(c.battery_capacity_mah * kUcPerMah);
        remaining_uc = report.capacity_uc;
        measure_cost_uc = std::llround(c.measure_cost_mc * kUcPerMc);
        tx_cost_uc = std::llround(c.tx_cost_mc * kUcPerMc);
    }

    std::uint64_t epoch_time_s(std::uint64_t k) const {
        return k * kSecondsPerDay / static_cast<std::uint64_t>(cfg->schedule_per_day);
    }

    void die(double at_s) {
        alive = false;
        report.death_day = at_s / static_cast<double>(kSecondsPerDay);
    }

    // Debits sleep current up to `t_s`; returns false if the node died on the way.
    bool sleep_until(std::uint64_t t_s) {
        if (t_s <= last_s)
            return true;
        const std::int64_t due = std::llround(cfg->sleep_current_ua * static_cast<double>(t_s - last_s));
        if (due > remaining_uc) {
            const double survive_s = static_cast<double>(remaining_uc) / cfg->sleep_current_ua;
            report.sleep_uc += remaining_uc;
            remaining_uc = 0;
            die(static_cast<double>(last_s) + survive_s);
            last_s = t_s;
            return false;
        }
        report.sleep_uc += due;
        remaining_uc -= due;
        last_s = t_s;
        return true;
    }

    double remaining_fraction() const {
        return static_cast<double>(remaining_uc) / static_cast<double>(report.capacity_uc);
    }
};

const Trajectory& trajectory_for(const ScenarioConfig& sc, std::uint32_t node_id, std::size_t channel) {
    static const Trajectory kDefault = Constant{6.0};
    const auto it = sc.trajectories.find(node_id);
    if (it == sc.trajectories.end() || channel >= it->second.size())
        return kDefault;
    return it->second[channel];
}

}  // namespace

double true_moisture(const Trajectory& traj, double env_emc, double t_days) {
    return std::visit(Overloaded{
                          [](const Constant& c) { return c.mc; },
                          [&](const Step& s) { return t_days < s.at_day ? s.from : s.to; },
                          [&](const FirstOrderApproach& f) {
                              return env_emc + (f.mc0 - env_emc) * std::exp(-f.rate_per_day * t_days);
                          },
                      },
                      traj);
}

void NodeConfig::validate() const {
    const std::string who = "node " + std::to_string(node_id) + ": ";
    require(channel_count >= 1 && channel_count <= static_cast<int>(protocol::kMaxChannels),
            who + "channel_count must be 1..10");
    require(schedule_per_day >= 1, who + "schedule must be >= 1 per day");
    require(battery_capacity_mah > 0.0 && std::isfinite(battery_capacity_mah), who + "battery capacity must be > 0");
    require(sleep_current_ua > 0.0 && std::isfinite(sleep_current_ua), who + "sleep current must be > 0");
    require(measure_cost_mc > 0.0 && std::isfinite(measure_cost_mc), who + "measure cost must be > 0");
    require(tx_cost_mc > 0.0 && std::isfinite(tx_cost_mc), who + "tx cost must be > 0");
    require(radio_loss_prob >= 0.0 && radio_loss_prob <= 1.0, who + "radio_loss_prob must be in [0,1]");
    require(retransmit_limit >= 0, who + "retransmit_limit must be >= 0");
}

void ScenarioConfig::validate() const {
    require(duration_days > 0.0 && std::isfinite(duration_days), "duration_days must be > 0");
    require(!environment.empty(), "environment timeline is empty");
    require(environment.front().from_day == 0.0, "environment timeline must start at day 0");
    for (std::size_t i = 0; i < environment.size(); ++i) {
        const auto& seg = environment[i];
        require(seg.to_day > seg.from_day, "environment segment has non-positive length");
        if (i > 0)
            require(seg.from_day == environment[i - 1].to_day, "environment segments must be contiguous");
        try {
            seg.env.validate();
        } catch (const moisture::DomainError& e) {
            throw ConfigError(std::string("environment segment: ") + e.what());
        }
    }
    require(environment.back().to_day >= duration_days, "environment timeline must cover the whole duration");
    require(noise.sigma_log10r >= 0.0 && std::isfinite(noise.sigma_log10r), "noise sigma must be >= 0");
    require(noise.high_mc_factor >= 1.0 && std::isfinite(noise.high_mc_factor), "high_mc_noise_factor must be >= 1");
    for (const auto& [node, trajs] : trajectories) {
        require(trajs.size() <= protocol::kMaxChannels, "at most 10 trajectories per node");
        for (const auto& t : trajs)
            validate_trajectory(t);
    }
    try {
        emc.validate();
    } catch (const moisture::DomainError& e) {
        throw ConfigError(e.what());
    }
}

const moisture::Environment& ScenarioConfig::environment_at(double t_days) const {
    for (const auto& seg : environment) {
        if (t_days >= seg.from_day && t_days < seg.to_day)
            return seg.env;
    }
    return environment.back().env;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
}

std::uint64_t Rng::next() noexcept { return engine_(); }

double Rng::uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::normal() noexcept {
    if (spare_) {
        const double v = *spare_;
        spare_.reset();
        return v;
    }
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
}

moisture::Resistance transduce(double true_mc, const NoiseModel& noise, Rng& rng) {
    const double exact = std::log10(moisture::moisture_to_resistance(moisture::MoistureContent(true_mc)).ohms());
    if (noise.sigma_log10r == 0.0)
        return moisture::Resistance(std::pow(10.0, exact));
    const double sigma = noise.sigma_log10r * (true_mc > kHighMcNoiseAbove ? noise.high_mc_factor : 1.0);
    return moisture::Resistance(std::pow(10.0, exact + sigma * rng.normal()));
}

SimReport run_scenario(const std::vector<NodeConfig>& nodes, const ScenarioConfig& scenario, const FrameSink& sink) {
    scenario.validate();
    require(!nodes.empty(), "scenario has no nodes");
    for (const auto& n : nodes)
        n.validate();
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = i + 1; j < nodes.size(); ++j)
            require(nodes[i].node_id != nodes[j].node_id, "duplicate node_id " + std::to_string(nodes[i].node_id));

    const auto duration_s = static_cast<std::uint64_t>(std::llround(scenario.duration_days * kSecondsPerDay));

    std::vector<NodeState> states;
    states.reserve(nodes.size());
    for (const auto& n : nodes)
        states.emplace_back(n, scenario.seed);

    // (time, node index), earliest first, ties broken by configuration order.
    using Event = std::pair<std::uint64_t, std::size_t>;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
    for (std::size_t i = 0; i < states.size(); ++i)
        queue.emplace(0, i);

    while (!queue.empty()) {
        const auto [t_s, idx] = queue.top();
        queue.pop();
        NodeState& st = states[idx];
        const NodeConfig& cfg = *st.cfg;

        if (!st.sleep_until(t_s))
            continue;
        if (st.remaining_uc < st.measure_cost_uc) {
            st.die(static_cast<double>(t_s));
            continue;
        }
        st.remaining_uc -= st.measure_cost_uc;
        st.report.measure_uc += st.measure_cost_uc;
        ++st.report.measurements;

        const double t_days = static_cast<double>(t_s) / kSecondsPerDay;
        const moisture::Environment& env = scenario.environment_at(t_days);
        const double emc = moisture::equilibrium_moisture(env, scenario.emc).percent();

        protocol::Frame frame;
        frame.node_id = cfg.node_id;
        frame.seq = st.seq++;
        frame.timestamp = scenario.start_time + t_s;
        frame.battery_mv = static_cast<std::uint16_t>(
            std::lround(kEmptyBatteryMv + (kFullBatteryMv - kEmptyBatteryMv) * st.remaining_fraction()));
        frame.temp_centi_c = static_cast<std::int16_t>(std::lround(env.temperature_c * 100.0));
        frame.rh_permille = static_cast<std::uint16_t>(std::lround(env.relative_humidity * 1000.0));
        for (int ch = 0; ch < cfg.channel_count; ++ch) {
            const double mc = true_moisture(trajectory_for(scenario, cfg.node_id, ch), emc, t_days);
            const auto r = transduce(mc, scenario.noise, st.noise_rng);
            frame.channels.push_back({static_cast<std::uint8_t>(ch), protocol::to_log10r_milli(r.ohms())});
        }
        const auto bytes = protocol::encode(frame);

        bool attempted = false;
        bool delivered = false;
        for (int attempt = 0; attempt <= cfg.retransmit_limit; ++attempt) {
            if (st.remaining_uc < st.tx_cost_uc) {
                st.die(static_cast<double>(t_s));
                break;
            }
            st.remaining_uc -= st.tx_cost_uc;
            st.report.tx_uc += st.tx_cost_uc;
            ++st.report.tx_attempts;
            attempted = true;
            if (!st.radio_rng.bernoulli(cfg.radio_loss_prob)) {
                delivered = true;
                break;
            }
        }
        if (attempted) {
            ++st.report.frames_emitted;
            if (delivered) {
                ++st.report.frames_delivered;
                if (sink)
                    sink(frame, bytes);
            } else {
                ++st.report.frames_lost;
            }
        }

        if (!st.alive)
            continue;
        const std::uint64_t next = st.epoch_time_s(++st.epoch);
        if (next < duration_s)
            queue.emplace(next, idx);
    }

    SimReport out;
    out.battery_remaining_fraction = 1.0;
    out.projected_lifetime_days = std::numeric_limits<double>::infinity();
    const double end_days = static_cast<double>(duration_s) / kSecondsPerDay;
    const auto& end_env = scenario.environment_at(end_days);
    const double end_emc = moisture::equilibrium_moisture(end_env, scenario.emc).percent();
    for (auto& st : states) {
        if (st.alive)
            st.sleep_until(duration_s);
        NodeReport& r = st.report;
        r.battery_remaining_fraction = st.remaining_fraction();
        if (r.death_day) {
            r.projected_lifetime_days = *r.death_day;
        } else {
            const double per_day = static_cast<double>(r.consumed_uc()) / end_days;
            r.projected_lifetime_days = static_cast<double>(r.capacity_uc) / per_day;
        }
        for (int ch = 0; ch < st.cfg->channel_count; ++ch)
            r.final_true_mc.push_back(true_moisture(trajectory_for(scenario, r.node_id, ch), end_emc, end_days));

        out.frames_emitted += r.frames_emitted;
        out.frames_delivered += r.frames_delivered;
        out.frames_lost += r.frames_lost;
        out.battery_remaining_fraction = std::min(out.battery_remaining_fraction, r.battery_remaining_fraction);
        out.projected_lifetime_days = std::min(out.projected_lifetime_days, r.projected_lifetime_days);
        out.nodes.push_back(std::move(r));
    }
    return out;
}

}  // namespace woodmon::sim
