#include "edgesignal/sim/scenario.hpp"

#include "edgesignal/codec.hpp"
#include "edgesignal/config.hpp"
#include "edgesignal/errors.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace edgesignal::sim {

std::string_view to_string(EvKind kind)
{
    return kind == EvKind::Ambulance ? "ambulance" : "fire";
}

EvKind ev_kind_from_string(std::string_view name)
{
    if (name == "ambulance") {
        return EvKind::Ambulance;
    }
    if (name == "fire") {
        return EvKind::Fire;
    }
    throw InputError(fmt::format("unknown emergency vehicle kind '{}'", name));
}

namespace {

std::string describe(const ScenarioEvent& event, std::size_t position)
{
    return fmt::format("event {} at t={} s", position, to_seconds(event.at));
}

ScenarioEvent event_from_json(const Json& j, const std::string& path)
{
    Fields f(j, path);
    ScenarioEvent event;
    event.at = Timestamp{f.seconds("at")};
    if (event.at < Timestamp{}) {
        throw InputError(f.path("at") + ": must not be negative");
    }
    const std::string kind = f.string("kind");
    if (kind == "Arrival") {
        Arrival arrival;
        arrival.lane_id = static_cast<LaneId>(f.unsigned_int("lane_id"));
        arrival.n_vehicles = static_cast<std::uint32_t>(f.unsigned_int_or("n_vehicles", 1));
        event.kind = arrival;
    } else if (kind == "EvArrival") {
        EvArrival arrival;
        arrival.lane_id = static_cast<LaneId>(f.unsigned_int("lane_id"));
        try {
            arrival.kind = ev_kind_from_string(f.string("ev"));
        } catch (const InputError& e) {
            throw InputError(f.path("ev") + ": " + e.what());
        }
        event.kind = arrival;
    } else if (kind == "WeatherChange") {
        try {
            event.kind = WeatherChange{weather_from_string(f.string("profile"))};
        } catch (const InputError& e) {
            throw InputError(f.path("profile") + ": " + e.what());
        }
    } else if (kind == "End") {
        event.kind = End{};
    } else {
        throw InputError(f.path("kind") + ": unknown event kind '" + kind + "'");
    }
    f.finish();
    return event;
}

Json event_to_json(const ScenarioEvent& event)
{
    Json j = {{"at", to_seconds(event.at)}};
    std::visit(
        [&j](const auto& kind) {
            using T = std::decay_t<decltype(kind)>;
            if constexpr (std::is_same_v<T, Arrival>) {
                j["kind"] = "Arrival";
                j["lane_id"] = kind.lane_id;
                j["n_vehicles"] = kind.n_vehicles;
            } else if constexpr (std::is_same_v<T, EvArrival>) {
                j["kind"] = "EvArrival";
                j["lane_id"] = kind.lane_id;
                j["ev"] = std::string(to_string(kind.kind));
            } else if constexpr (std::is_same_v<T, WeatherChange>) {
                j["kind"] = "WeatherChange";
                j["profile"] = std::string(to_string(kind.profile));
            } else {
                j["kind"] = "End";
            }
        },
        event.kind);
    return j;
}

/// Reads schema and initial weather from a document or header line.
void read_header(Fields& f, Scenario& scenario)
{
    const auto schema = f.unsigned_int("schema");
    if (schema != static_cast<std::uint64_t>(kSchemaVersion)) {
        throw InputError(fmt::format("{}: unsupported schema {}, expected {}", f.path("schema"), schema,
                                     kSchemaVersion));
    }
    try {
        scenario.initial_weather = weather_from_string(f.string_or("initial_weather", "ClearSunny"));
    } catch (const InputError& e) {
        throw InputError(f.path("initial_weather") + ": " + e.what());
    }
}

Scenario parse_document(const Json& doc)
{
    Scenario scenario;
    Fields f(doc, "scenario");
    read_header(f, scenario);
    const Json& events = f.at("events");
    if (!events.is_array()) {
        throw InputError("scenario.events: expected an array");
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
        scenario.events.push_back(event_from_json(events[i], fmt::format("scenario.events[{}]", i)));
    }
    f.finish();
    return scenario;
}

Scenario parse_lines(std::string_view text)
{
    Scenario scenario;
    bool have_header = false;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto end = std::min(text.find('\n', start), text.size());
        const std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
        }
        try {
            if (!have_header) {
                Fields f(j, "header");
                read_header(f, scenario);
                f.finish();
                have_header = true;
            } else {
                scenario.events.push_back(event_from_json(j, "event"));
            }
        } catch (const ParseError&) {
            throw;
        } catch (const InputError& e) {
            throw ParseError(line_no, e.what());
        }
    }
    if (!have_header) {
        throw ParseError(0, "scenario is empty");
    }
    return scenario;
}

} // namespace

void Scenario::validate(const ControllerConfig& config) const
{
    const auto lanes = config.lane_ids();
    const auto known = [&lanes](LaneId id) { return std::find(lanes.begin(), lanes.end(), id) != lanes.end(); };
    std::size_t ends = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& event = events[i];
        if (i > 0 && event.at < events[i - 1].at) {
            throw InputError(fmt::format("events out of order: {} comes after t={} s", describe(event, i),
                                         to_seconds(events[i - 1].at)));
        }
        if (std::holds_alternative<End>(event.kind)) {
            ++ends;
            if (i + 1 != events.size()) {
                throw InputError(fmt::format("{}: End must be the last event", describe(event, i)));
            }
        }
        LaneId lane = 0;
        bool has_lane = false;
        if (const auto* a = std::get_if<Arrival>(&event.kind)) {
            lane = a->lane_id;
            has_lane = true;
        } else if (const auto* ev = std::get_if<EvArrival>(&event.kind)) {
            lane = ev->lane_id;
            has_lane = true;
        }
        if (has_lane && !known(lane)) {
            throw InputError(fmt::format("{}: lane {} is not configured", describe(event, i), lane));
        }
    }
    if (ends != 1) {
        throw InputError("scenario must end with exactly one End event");
    }
}

Timestamp Scenario::end_time() const
{
    return events.empty() ? Timestamp{} : events.back().at;
}

Scenario parse_scenario(std::string_view text)
{
    Json doc;
    bool whole = true;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error&) {
        whole = false;
    }
    if (whole && doc.is_object() && doc.contains("events")) {
        return parse_document(doc);
    }
    return parse_lines(text);
}

Scenario load_scenario(const std::filesystem::path& path)
{
    return parse_scenario(read_file(path));
}

std::string dump_scenario(const Scenario& scenario)
{
    Json events = Json::array();
    for (const auto& event : scenario.events) {
        events.push_back(event_to_json(event));
    }
    const Json doc = {{"schema", kSchemaVersion},
                      {"initial_weather", std::string(to_string(scenario.initial_weather))},
                      {"events", std::move(events)}};
    return doc.dump(2) + "\n";
}

} // namespace edgesignal::sim
