#include "edgesignal/codec.hpp"
#include "edgesignal/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace edgesignal {

namespace {

const Json& require_array(const Json& j, const std::string& path)
{
    if (!j.is_array()) {
        throw InputError(path + ": expected an array");
    }
    return j;
}

} // namespace

// ---------------------------------------------------------------------------
// Fields

Fields::Fields(const Json& object, std::string path) : object_(object), path_(std::move(path))
{
    if (!object_.is_object()) {
        throw InputError(path_ + ": expected an object");
    }
}

const Json& Fields::at(const char* key)
{
    const auto it = object_.find(key);
    if (it == object_.end()) {
        throw InputError(path(key) + ": missing required field");
    }
    seen_.insert(key);
    return *it;
}

double Fields::number(const char* key)
{
    const Json& value = at(key);
    if (!value.is_number()) {
        throw InputError(path(key) + ": expected a number");
    }
    return value.get<double>();
}

double Fields::number_or(const char* key, double fallback)
{
    return has(key) ? number(key) : fallback;
}

std::uint64_t Fields::unsigned_int(const char* key)
{
    const Json& value = at(key);
    if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0)) {
        throw InputError(path(key) + ": expected a non-negative integer");
    }
    return value.get<std::uint64_t>();
}

std::uint64_t Fields::unsigned_int_or(const char* key, std::uint64_t fallback)
{
    return has(key) ? unsigned_int(key) : fallback;
}

std::string Fields::string(const char* key)
{
    const Json& value = at(key);
    if (!value.is_string()) {
        throw InputError(path(key) + ": expected a string");
    }
    return value.get<std::string>();
}

std::string Fields::string_or(const char* key, std::string fallback)
{
    return has(key) ? string(key) : std::move(fallback);
}

bool Fields::boolean_or(const char* key, bool fallback)
{
    if (!has(key)) {
        return fallback;
    }
    const Json& value = at(key);
    if (!value.is_boolean()) {
        throw InputError(path(key) + ": expected true or false");
    }
    return value.get<bool>();
}

Duration Fields::seconds(const char* key)
{
    const double value = number(key);
    try {
        return duration_from_seconds(value);
    } catch (const InputError&) {
        throw InputError(path(key) + ": expected a finite number of seconds");
    }
}

Duration Fields::seconds_or(const char* key, Duration fallback)
{
    return has(key) ? seconds(key) : fallback;
}

void Fields::finish() const
{
    for (const auto& [key, value] : object_.items()) {
        if (!seen_.contains(key)) {
            throw InputError(path_ + "." + key + ": unknown field");
        }
    }
}

// ---------------------------------------------------------------------------
// Perception

Json to_json(const OcrReading& reading)
{
    return {{"text", reading.text},
            {"orientation", std::string(to_string(reading.orientation))},
            {"confidence", reading.confidence}};
}

OcrReading reading_from_json(const Json& j, const std::string& path)
{
    Fields f(j, path);
    OcrReading reading;
    reading.text = f.string("text");
    reading.orientation = orientation_from_string(f.string_or("orientation", "AsCaptured"));
    reading.confidence = f.number_or("confidence", 1.0);
    f.finish();
    try {
        reading.validate();
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
    return reading;
}

Json to_json(const DetectionFrame& frame)
{
    Json readings = Json::array();
    for (const auto& reading : frame.readings) {
        readings.push_back(to_json(reading));
    }
    return {{"lane_id", frame.lane_id},
            {"vehicle_count", frame.vehicle_count},
            {"captured_at", to_seconds(frame.captured_at)},
            {"readings", std::move(readings)}};
}

DetectionFrame frame_from_json(const Json& j, const std::string& path)
{
    Fields f(j, path);
    DetectionFrame frame;
    frame.lane_id = static_cast<LaneId>(f.unsigned_int("lane_id"));
    frame.vehicle_count = static_cast<std::uint32_t>(f.unsigned_int("vehicle_count"));
    frame.captured_at = Timestamp{f.seconds_or("captured_at", Duration::zero())};
    if (f.has("readings")) {
        const Json& readings = require_array(f.at("readings"), f.path("readings"));
        for (std::size_t i = 0; i < readings.size(); ++i) {
            frame.readings.push_back(
                reading_from_json(readings[i], f.path("readings") + "[" + std::to_string(i) + "]"));
        }
    }
    f.finish();
    return frame;
}

Json to_json(const EvDetection& ev)
{
    return {{"ambulance", ev.ambulance_count}, {"fire", ev.fire_count}, {"total", ev.total()}};
}

EvDetection ev_from_json(const Json& j, const std::string& path)
{
    Fields f(j, path);
    EvDetection ev;
    ev.ambulance_count = static_cast<std::uint32_t>(f.unsigned_int_or("ambulance", 0));
    ev.fire_count = static_cast<std::uint32_t>(f.unsigned_int_or("fire", 0));
    if (f.has("total") && f.unsigned_int("total") != ev.total()) {
        throw InputError(path + ".total: does not equal ambulance + fire");
    }
    f.finish();
    return ev;
}

// ---------------------------------------------------------------------------
// Snapshots and decisions

Json to_json(const IntersectionSnapshot& snapshot)
{
    Json lanes = Json::array();
    for (const auto& lane : snapshot.lanes) {
        lanes.push_back({{"lane_id", lane.lane_id},
                         {"index", lane.index.value},
                         {"ev", to_json(lane.ev)},
                         {"red_elapsed", to_seconds(lane.red_elapsed)},
                         {"last_frame_at", to_seconds(lane.last_frame_at)},
                         {"stale", lane.stale}});
    }
    return {{"epoch", to_seconds(snapshot.epoch)}, {"lanes", std::move(lanes)}};
}

IntersectionSnapshot snapshot_from_json(const Json& j, const std::string& path)
{
    Fields f(j, path);
    IntersectionSnapshot snapshot;
    snapshot.epoch = Timestamp{f.seconds("epoch")};
    const Json& lanes = require_array(f.at("lanes"), f.path("lanes"));
    for (std::size_t i = 0; i < lanes.size(); ++i) {
        const std::string lane_path = f.path("lanes") + "[" + std::to_string(i) + "]";
        Fields lf(lanes[i], lane_path);
        LaneState lane;
        lane.lane_id = static_cast<LaneId>(lf.unsigned_int("lane_id"));
        lane.index.value = lf.number("index");
        lane.ev = lf.has("ev") ? ev_from_json(lf.at("ev"), lf.path("ev")) : EvDetection{};
        lane.red_elapsed = lf.seconds_or("red_elapsed", Duration::zero());
        lane.last_frame_at = Timestamp{lf.seconds_or("last_frame_at", Duration::zero())};
        lane.stale = lf.boolean_or("stale", false);
        lf.finish();
        snapshot.lanes.push_back(lane);
    }
    f.finish();
    return snapshot;
}

Json to_json(const Decision& decision)
{
    Json lanes = Json::array();
    for (const auto& [lane, phase] : decision.phases) {
        Json entry = {{"lane_id", lane}, {"phase", std::string(to_string(phase))}};
        if (const auto band = decision.bands.find(lane); band != decision.bands.end()) {
            entry["band"] = std::string(to_string(band->second));
        }
        if (const auto interval = decision.next_sample_interval.find(lane);
            interval != decision.next_sample_interval.end()) {
            entry["next_sample_interval"] = to_seconds(interval->second);
        }
        lanes.push_back(std::move(entry));
    }
    return {{"green_lane", decision.green_lane},
            {"reason", std::string(to_string(decision.reason))},
            {"lanes", std::move(lanes)}};
}

Decision decision_from_json(const Json& j, const std::string& path)
{
    Fields f(j, path);
    Decision decision;
    decision.green_lane = static_cast<LaneId>(f.unsigned_int("green_lane"));
    decision.reason = reason_from_string(f.string("reason"));
    const Json& lanes = require_array(f.at("lanes"), f.path("lanes"));
    for (std::size_t i = 0; i < lanes.size(); ++i) {
        Fields lf(lanes[i], f.path("lanes") + "[" + std::to_string(i) + "]");
        const auto lane = static_cast<LaneId>(lf.unsigned_int("lane_id"));
        decision.phases[lane] = phase_from_string(lf.string("phase"));
        if (lf.has("band")) {
            decision.bands[lane] = band_from_string(lf.string("band"));
        }
        if (lf.has("next_sample_interval")) {
            decision.next_sample_interval[lane] = lf.seconds("next_sample_interval");
        }
        lf.finish();
    }
    f.finish();
    return decision;
}

// ---------------------------------------------------------------------------
// Configuration

Json to_json(const ControllerConfig& config)
{
    Json lanes = Json::array();
    for (const auto& lane : config.lanes) {
        lanes.push_back({{"lane_id", lane.lane_id},
                         {"width_m", lane.geometry.width_m},
                         {"coverage_length_m", lane.geometry.coverage_length_m}});
    }
    return {
        {"thresholds", {{"c1", config.thresholds.c1}, {"c3", config.thresholds.c3}}},
        {"threshold_time_s", to_seconds(config.threshold_time)},
        {"sample_interval_low_s", to_seconds(config.sample_interval_low)},
        {"sample_interval_mid_s", to_seconds(config.sample_interval_mid)},
        {"min_green_s", to_seconds(config.min_green)},
        {"ev_preempts_min_green", config.ev_preempts_min_green},
        {"keywords", {{"ambulance", config.keywords.ambulance}, {"fire", config.keywords.fire}}},
        {"min_confidence", config.min_confidence},
        {"lanes", std::move(lanes)},
    };
}

namespace {

std::vector<std::string> string_list(const Json& j, const std::string& path)
{
    require_array(j, path);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_string()) {
            throw InputError(path + "[" + std::to_string(i) + "]: expected a string");
        }
        out.push_back(j[i].get<std::string>());
    }
    return out;
}

} // namespace

ControllerConfig controller_config_from_json(const Json& j, const std::string& path)
{
    Fields f(j, path);
    ControllerConfig config;
    if (f.has("thresholds")) {
        Fields t(f.at("thresholds"), f.path("thresholds"));
        config.thresholds.c1 = t.number_or("c1", config.thresholds.c1);
        config.thresholds.c3 = t.number_or("c3", config.thresholds.c3);
        t.finish();
    }
    config.threshold_time = f.seconds_or("threshold_time_s", config.threshold_time);
    config.sample_interval_low = f.seconds_or("sample_interval_low_s", config.sample_interval_low);
    config.sample_interval_mid = f.seconds_or("sample_interval_mid_s", config.sample_interval_mid);
    config.min_green = f.seconds_or("min_green_s", config.min_green);
    config.ev_preempts_min_green = f.boolean_or("ev_preempts_min_green", false);
    if (f.has("keywords")) {
        Fields k(f.at("keywords"), f.path("keywords"));
        if (k.has("ambulance")) {
            config.keywords.ambulance = string_list(k.at("ambulance"), k.path("ambulance"));
        }
        if (k.has("fire")) {
            config.keywords.fire = string_list(k.at("fire"), k.path("fire"));
        }
        k.finish();
    }
    config.min_confidence = f.number_or("min_confidence", config.min_confidence);
    if (f.has("lanes")) {
        const Json& lanes = require_array(f.at("lanes"), f.path("lanes"));
        config.lanes.clear();
        for (std::size_t i = 0; i < lanes.size(); ++i) {
            Fields lf(lanes[i], f.path("lanes") + "[" + std::to_string(i) + "]");
            LaneConfig lane;
            lane.lane_id = static_cast<LaneId>(lf.unsigned_int("lane_id"));
            lane.geometry.width_m = lf.number_or("width_m", lane.geometry.width_m);
            lane.geometry.coverage_length_m =
                lf.number_or("coverage_length_m", lane.geometry.coverage_length_m);
            lf.finish();
            config.lanes.push_back(lane);
        }
    }
    f.finish();
    return config;
}

Json to_json(const WeatherProfile& profile)
{
    return {{"detection_scale", profile.detection_scale},
            {"dropout_prob", profile.dropout_prob},
            {"ocr_confidence_penalty", profile.ocr_confidence_penalty}};
}

Json to_json(const SystemConfig& config)
{
    Json weather = Json::object();
    for (const auto& [kind, profile] : config.weather) {
        weather[std::string(to_string(kind))] = to_json(profile);
    }
    return {
        {"schema", kSchemaVersion},
        {"controller", to_json(config.controller)},
        {"epoch_interval_s", to_seconds(config.epoch_interval)},
        {"simulation",
         {{"saturation_rate", config.simulation.saturation_rate},
          {"actuation_latency_s", to_seconds(config.simulation.actuation_latency)},
          {"base_ocr_confidence", config.simulation.base_ocr_confidence}}},
        {"weather_profiles", std::move(weather)},
    };
}

SystemConfig system_config_from_json(const Json& j)
{
    Fields f(j, "config");
    const auto schema = f.unsigned_int("schema");
    if (schema != kSchemaVersion) {
        throw InputError("config.schema: unsupported version " + std::to_string(schema));
    }
    SystemConfig config;
    if (f.has("controller")) {
        config.controller = controller_config_from_json(f.at("controller"), f.path("controller"));
    }
    config.epoch_interval = f.seconds_or("epoch_interval_s", config.epoch_interval);
    if (f.has("simulation")) {
        Fields s(f.at("simulation"), f.path("simulation"));
        auto& sim = config.simulation;
        sim.saturation_rate = s.number_or("saturation_rate", sim.saturation_rate);
        sim.actuation_latency = s.seconds_or("actuation_latency_s", sim.actuation_latency);
        sim.base_ocr_confidence = s.number_or("base_ocr_confidence", sim.base_ocr_confidence);
        s.finish();
    }
    if (f.has("weather_profiles")) {
        Fields w(f.at("weather_profiles"), f.path("weather_profiles"));
        for (auto kind : kAllWeather) {
            const std::string name(to_string(kind));
            if (!w.has(name.c_str())) {
                continue;
            }
            Fields p(w.at(name.c_str()), w.path(name.c_str()));
            auto& profile = config.weather[kind];
            profile.detection_scale = p.number_or("detection_scale", profile.detection_scale);
            profile.dropout_prob = p.number_or("dropout_prob", profile.dropout_prob);
            profile.ocr_confidence_penalty =
                p.number_or("ocr_confidence_penalty", profile.ocr_confidence_penalty);
            p.finish();
        }
        w.finish();
    }
    f.finish();
    return config;
}

// ---------------------------------------------------------------------------
// Config document

void SimulationParams::validate() const
{
    if (!std::isfinite(saturation_rate) || !(saturation_rate > 0.0)) {
        throw ConfigError("simulation.saturation_rate must be positive");
    }
    if (actuation_latency < Duration::zero()) {
        throw ConfigError("simulation.actuation_latency_s must not be negative");
    }
    if (!std::isfinite(base_ocr_confidence) || base_ocr_confidence < 0.0 ||
        base_ocr_confidence > 1.0) {
        throw ConfigError("simulation.base_ocr_confidence must lie in [0, 1]");
    }
}

void SystemConfig::validate() const
{
    controller.validate();
    if (epoch_interval <= Duration::zero()) {
        throw ConfigError("epoch_interval_s must be positive");
    }
    simulation.validate();
    for (const auto& [kind, profile] : weather) {
        profile.validate();
    }
}

SystemConfig parse_config(std::string_view text)
{
    try {
        const Json j = Json::parse(text);
        SystemConfig config = system_config_from_json(j);
        config.validate();
        return config;
    } catch (const ConfigError&) {
        throw;
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

SystemConfig load_config(const std::filesystem::path& path)
{
    try {
        return parse_config(read_file(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string dump_config(const SystemConfig& config)
{
    return to_json(config).dump(2) + "\n";
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file_atomically(const std::filesystem::path& path, std::string_view contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out.flush()) {
            throw std::runtime_error("short write to " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

} // namespace edgesignal
