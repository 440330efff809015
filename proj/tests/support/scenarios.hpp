#pragma once

// Scenario builders shared by simulator tests and the acceptance suite.

#include "edgesignal/sim/scenario.hpp"
#include "support/generators.hpp"

#include <chrono>

namespace edgesignal::testkit {

inline sim::ScenarioEvent at(double seconds, decltype(sim::ScenarioEvent::kind) kind)
{
    return {timestamp_from_seconds(seconds), std::move(kind)};
}

/// Lanes 1-3 get a vehicle each second with probability `heavy_rate`; lane 4
/// gets a single vehicle at t=5 and nothing else.
inline sim::Scenario one_light_lane(std::uint64_t seed, int horizon_s, double heavy_rate = 0.3)
{
    Gen gen(seed);
    sim::Scenario scenario;
    for (int t = 0; t < horizon_s; ++t) {
        for (LaneId lane = 1; lane <= 3; ++lane) {
            if (gen.coin(heavy_rate)) {
                scenario.events.push_back(at(t, sim::Arrival{lane, 1}));
            }
        }
        if (t == 5) {
            scenario.events.push_back(at(t, sim::Arrival{4, 1}));
        }
    }
    scenario.events.push_back(at(horizon_s, sim::End{}));
    return scenario;
}

/// Arbitrary valid scenario over the configured lanes: bursts of arrivals,
/// occasional emergency vehicles and weather changes.
inline sim::Scenario random_scenario(Gen& gen, const ControllerConfig& config, int horizon_s)
{
    const auto lanes = config.lane_ids();
    sim::Scenario scenario;
    scenario.initial_weather = kAllWeather[gen.uniform(0, kAllWeather.size() - 1)];
    double t = 0.0;
    while (true) {
        t += gen.real(0.0, 4.0);
        if (t >= horizon_s) {
            break;
        }
        const LaneId lane = lanes[gen.uniform(0, lanes.size() - 1)];
        const double roll = gen.real(0.0, 1.0);
        if (roll < 0.02) {
            scenario.events.push_back(
                at(t, sim::EvArrival{lane, gen.coin() ? sim::EvKind::Ambulance : sim::EvKind::Fire}));
        } else if (roll < 0.03) {
            scenario.events.push_back(at(t, sim::WeatherChange{kAllWeather[gen.uniform(0, kAllWeather.size() - 1)]}));
        } else {
            scenario.events.push_back(at(t, sim::Arrival{lane, static_cast<std::uint32_t>(gen.uniform(1, 6))}));
        }
    }
    scenario.events.push_back(at(horizon_s, sim::End{}));
    return scenario;
}

} // namespace edgesignal::testkit
