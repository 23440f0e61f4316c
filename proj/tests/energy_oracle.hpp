#pragma once

#include <cmath>

#include "woodmon/node_sim.hpp"

namespace woodmon::test {

// Closed-form battery lifetime: capacity over the daily charge budget, with
// the expected number of transmit attempts under independent losses.
inline double closed_form_lifetime_days(const sim::NodeConfig& n) {
    const double capacity_c = n.battery_capacity_mah * 3.6;
    const double sleep_c_per_day = n.sleep_current_ua * 1e-6 * 86400.0;
    double expected_attempts = 0.0;
    for (int i = 0; i <= n.retransmit_limit; ++i)
        expected_attempts += std::pow(n.radio_loss_prob, i);
    const double scheduled_c_per_day =
        n.schedule_per_day * (n.measure_cost_mc * 1e-3 + expected_attempts * n.tx_cost_mc * 1e-3);
    return capacity_c / (sleep_c_per_day + scheduled_c_per_day);
}

}  // namespace woodmon::test
