#pragma once

#include "edgesignal/codec.hpp"
#include "edgesignal/config.hpp"
#include "edgesignal/sim/scenario.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace edgesignal::sim {

struct LaneMetrics {
    LaneId lane_id = 0;
    std::uint64_t arrived = 0;
    std::uint64_t discharged = 0;
    std::uint64_t queued_at_end = 0;
    /// Arrival to discharge, over discharged vehicles.
    double mean_wait_s = 0.0;
    double max_wait_s = 0.0;
    /// Fraction of the horizon this lane's signal head showed green.
    double green_share = 0.0;
    std::uint64_t green_grants = 0;
    /// Longest continuous red seen by the controller, including any red still
    /// running at the end.
    double max_red_s = 0.0;

    friend bool operator==(const LaneMetrics&, const LaneMetrics&) = default;
};

struct MetricsReport {
    double horizon_s = 0.0;
    std::vector<LaneMetrics> lanes;
    std::uint64_t ev_arrivals = 0;
    /// Emergency vehicles whose lane turned green before the end.
    std::uint64_t ev_served = 0;
    /// Arrival to the signal head of its lane showing green; zero when it was
    /// already green.
    double ev_mean_delay_s = 0.0;
    double ev_max_delay_s = 0.0;
    std::uint64_t total_decisions = 0;
    /// threshold_time + min_green + epoch_interval, in controller time.
    double starvation_bound_s = 0.0;
    /// Red waits longer than the bound, counted at each grant and at the end.
    std::uint64_t starvation_violations = 0;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

Json to_json(const MetricsReport& report);
/// Long format, one `scope,metric,value` row per figure; scope is laneN or all.
std::string metrics_csv(const MetricsReport& report);

struct SimulationResult {
    /// Decision log text, header line first; replayable.
    std::string decision_log;
    MetricsReport metrics;
};

/// Single-threaded discrete-event run. Same-time events resolve in the order
/// scenario, discharge, actuation, sample, epoch, then by insertion order.
/// Detector noise draws from one stream per lane derived from `seed`.
/// Throws InputError when the scenario or config does not validate.
SimulationResult run_scenario(const Scenario& scenario, const SystemConfig& config, std::uint64_t seed);

} // namespace edgesignal::sim
