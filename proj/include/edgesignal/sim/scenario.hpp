#pragma once

#include "edgesignal/controller.hpp"
#include "edgesignal/time.hpp"
#include "edgesignal/weather.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace edgesignal::sim {

enum class EvKind { Ambulance, Fire };

std::string_view to_string(EvKind kind);
EvKind ev_kind_from_string(std::string_view name);

struct Arrival {
    LaneId lane_id = 0;
    std::uint32_t n_vehicles = 1;
    friend bool operator==(const Arrival&, const Arrival&) = default;
};

struct EvArrival {
    LaneId lane_id = 0;
    EvKind kind = EvKind::Ambulance;
    friend bool operator==(const EvArrival&, const EvArrival&) = default;
};

struct WeatherChange {
    WeatherKind profile = WeatherKind::ClearSunny;
    friend bool operator==(const WeatherChange&, const WeatherChange&) = default;
};

struct End {
    friend bool operator==(const End&, const End&) = default;
};

struct ScenarioEvent {
    Timestamp at{};
    std::variant<Arrival, EvArrival, WeatherChange, End> kind;

    friend bool operator==(const ScenarioEvent&, const ScenarioEvent&) = default;
};

struct Scenario {
    WeatherKind initial_weather = WeatherKind::ClearSunny;
    std::vector<ScenarioEvent> events;

    /// Events must be sorted by time with exactly one End, last; lanes must be
    /// configured. Throws InputError citing the first offending event.
    void validate(const ControllerConfig& config) const;
    Timestamp end_time() const;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Accepts either one document {"schema": 1, "initial_weather": ..., "events": [...]}
/// or line-delimited records: a {"schema": 1, ...} header line, then one event
/// per line. Event times are seconds as decimals.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);
std::string dump_scenario(const Scenario& scenario);

} // namespace edgesignal::sim
