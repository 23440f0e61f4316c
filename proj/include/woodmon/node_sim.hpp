#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "woodmon/moisture.hpp"
#include "woodmon/protocol.hpp"
#include "woodmon/stability.hpp"

namespace woodmon::sim {

using stability::ConfigError;

inline constexpr std::uint64_t kSecondsPerDay = 86400;

// Ground-truth moisture trajectories.
struct Constant {
    double mc = 6.0;
};

struct Step {
    double at_day = 0.0;
    double from = 6.0;
    double to = 6.0;
};

// emc + (mc0 - emc) * exp(-rate * t): first-order approach to equilibrium.
struct FirstOrderApproach {
    double mc0 = 6.0;
    double rate_per_day = 0.0;
};

using Trajectory = std::variant<Constant, Step, FirstOrderApproach>;

double true_moisture(const Trajectory& traj, double env_emc, double t_days);

struct EnvironmentSegment {
    double from_day = 0.0;
    double to_day = 0.0;
    moisture::Environment env;
};

struct NoiseModel {
    double sigma_log10r = 0.0;
    // Multiplies sigma when the true value is above 20 %; a placeholder for
    // the meter's loss of accuracy at high moisture.
    double high_mc_factor = 2.0;
};

struct NodeConfig {
    std::uint32_t node_id = 1;
    int channel_count = 10;
    int schedule_per_day = 2;
    double battery_capacity_mah = 2600.0;
    double sleep_current_ua = 5.0;
    double measure_cost_mc = 50.0;  // millicoulombs per full measurement
    double tx_cost_mc = 30.0;       // millicoulombs per transmit attempt
    double radio_loss_prob = 0.0;
    int retransmit_limit = 0;

    void validate() const;
};

struct ScenarioConfig {
    double duration_days = 1.0;
    std::uint64_t start_time = 0;  // Unix seconds of simulated t = 0
    std::vector<EnvironmentSegment> environment;
    // Per node, per channel index. Channels without an entry hold a constant 6 %.
    std::map<std::uint32_t, std::vector<Trajectory>> trajectories;
    NoiseModel noise;
    std::uint64_t seed = 0;
    moisture::EmcParams emc = moisture::EmcParams::wood_handbook();

    void validate() const;
    // Environment in force at `t_days` (segments are half-open, the last one closed).
    const moisture::Environment& environment_at(double t_days) const;
};

// Deterministic generator; `stream` splits independent sequences off one seed.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next() noexcept;
    double uniform() noexcept;  // [0, 1)
    double normal() noexcept;   // standard normal
    bool bernoulli(double p) noexcept { return uniform() < p; }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

moisture::Resistance transduce(double true_mc, const NoiseModel& noise, Rng& rng);

struct NodeReport {
    std::uint32_t node_id = 0;
    std::uint64_t frames_emitted = 0;
    std::uint64_t frames_delivered = 0;
    std::uint64_t frames_lost = 0;
    std::uint64_t measurements = 0;
    std::uint64_t tx_attempts = 0;
    // Fixed-point energy ledger, microcoulombs.
    std::int64_t capacity_uc = 0;
    std::int64_t sleep_uc = 0;
    std::int64_t measure_uc = 0;
    std::int64_t tx_uc = 0;
    double battery_remaining_fraction = 1.0;
    double projected_lifetime_days = 0.0;
    std::optional<double> death_day;
    std::vector<double> final_true_mc;

    std::int64_t consumed_uc() const noexcept { return sleep_uc + measure_uc + tx_uc; }
};

struct SimReport {
    std::uint64_t frames_emitted = 0;
    std::uint64_t frames_delivered = 0;
    std::uint64_t frames_lost = 0;
    double battery_remaining_fraction = 1.0;  // worst node
    double projected_lifetime_days = 0.0;     // worst node
    std::vector<NodeReport> nodes;
};

// Receives every delivered frame, in delivery order, on the simulation thread.
using FrameSink = std::function<void(const protocol::Frame&, std::span<const std::uint8_t>)>;

SimReport run_scenario(const std::vector<NodeConfig>& nodes, const ScenarioConfig& scenario, const FrameSink& sink);

}  // namespace woodmon::sim
