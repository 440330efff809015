#pragma once

#include "edgesignal/controller.hpp"
#include "edgesignal/time.hpp"
#include "edgesignal/weather.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace edgesignal {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "0.1.0";

struct SimulationParams {
    /// Vehicles per second leaving a lane while it shows green.
    double saturation_rate = 0.5;
    /// Delay between a decision and the signal head changing.
    Duration actuation_latency = std::chrono::milliseconds(100);
    /// OCR confidence of emergency-vehicle lettering before weather penalties.
    double base_ocr_confidence = 0.95;

    void validate() const;

    friend bool operator==(const SimulationParams&, const SimulationParams&) = default;
};

/// The one configuration document shared by every subcommand.
struct SystemConfig {
    ControllerConfig controller;
    Duration epoch_interval = std::chrono::seconds(1);
    SimulationParams simulation;
    WeatherTable weather = default_weather_table();

    void validate() const;

    friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

/// Parses and validates a config document. Missing fields take their defaults;
/// unknown fields are rejected. Throws ConfigError.
SystemConfig parse_config(std::string_view text);
SystemConfig load_config(const std::filesystem::path& path);

/// Canonical serialization; parse_config(dump_config(c)) == c.
std::string dump_config(const SystemConfig& config);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomically(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

} // namespace edgesignal
