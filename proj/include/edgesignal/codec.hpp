#pragma once

#include "edgesignal/config.hpp"
#include "edgesignal/controller.hpp"
#include "edgesignal/frame.hpp"

#include <json.hpp>

#include <set>
#include <string>

namespace edgesignal {

using Json = nlohmann::json;

/// Strict reader over one JSON object. Every key must be consumed before
/// finish(), so typos surface as errors naming the full path.
class Fields {
public:
    Fields(const Json& object, std::string path);

    bool has(const char* key) const { return object_.contains(key); }
    const Json& at(const char* key);

    double number(const char* key);
    double number_or(const char* key, double fallback);
    std::uint64_t unsigned_int(const char* key);
    std::uint64_t unsigned_int_or(const char* key, std::uint64_t fallback);
    std::string string(const char* key);
    std::string string_or(const char* key, std::string fallback);
    bool boolean_or(const char* key, bool fallback);
    Duration seconds(const char* key);
    Duration seconds_or(const char* key, Duration fallback);

    std::string path(const char* key) const { return path_ + "." + key; }
    const std::string& path() const { return path_; }

    /// Throws InputError for keys nobody asked about.
    void finish() const;

private:
    const Json& object_;
    std::string path_;
    std::set<std::string> seen_;
};

Json to_json(const OcrReading& reading);
OcrReading reading_from_json(const Json& j, const std::string& path);

Json to_json(const DetectionFrame& frame);
DetectionFrame frame_from_json(const Json& j, const std::string& path);

Json to_json(const EvDetection& ev);
EvDetection ev_from_json(const Json& j, const std::string& path);

Json to_json(const IntersectionSnapshot& snapshot);
IntersectionSnapshot snapshot_from_json(const Json& j, const std::string& path);

Json to_json(const Decision& decision);
Decision decision_from_json(const Json& j, const std::string& path);

Json to_json(const ControllerConfig& config);
ControllerConfig controller_config_from_json(const Json& j, const std::string& path);

Json to_json(const SystemConfig& config);
SystemConfig system_config_from_json(const Json& j);

Json to_json(const WeatherProfile& profile);

} // namespace edgesignal
