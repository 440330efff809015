#include "edgesignal/weather.hpp"
#include "edgesignal/errors.hpp"

#include <cmath>
#include <string>

namespace edgesignal {

std::string_view to_string(WeatherKind kind)
{
    switch (kind) {
    case WeatherKind::ClearSunny:
        return "ClearSunny";
    case WeatherKind::Rainy:
        return "Rainy";
    case WeatherKind::HeavySnowfall:
        return "HeavySnowfall";
    case WeatherKind::Foggy:
        return "Foggy";
    case WeatherKind::RainyNight:
        return "RainyNight";
    case WeatherKind::Night:
        return "Night";
    }
    return "?";
}

WeatherKind weather_from_string(std::string_view name)
{
    for (auto kind : kAllWeather) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw InputError("unknown weather profile '" + std::string(name) + "'");
}

void WeatherProfile::validate() const
{
    const std::string who = "weather profile " + std::string(to_string(name));
    if (!std::isfinite(detection_scale) || !(detection_scale > 0.0) || detection_scale > 1.0) {
        throw ConfigError(who + ": detection_scale must lie in (0, 1]");
    }
    if (!std::isfinite(dropout_prob) || dropout_prob < 0.0 || !(dropout_prob < 1.0)) {
        throw ConfigError(who + ": dropout_prob must lie in [0, 1)");
    }
    if (!std::isfinite(ocr_confidence_penalty) || ocr_confidence_penalty < 0.0 ||
        !(ocr_confidence_penalty < 1.0)) {
        throw ConfigError(who + ": ocr_confidence_penalty must lie in [0, 1)");
    }
}

// Scales are chosen so a 10 m x 10 m lane reproduces the reference indices:
// Rainy 40 queued -> 30 seen, HeavySnowfall 24 -> 12, Foggy 26 -> 4,
// RainyNight 26 -> 13, Night 25 -> 20.
WeatherProfile default_profile(WeatherKind kind)
{
    switch (kind) {
    case WeatherKind::ClearSunny:
        return {kind, 1.0, 0.0, 0.0};
    case WeatherKind::Rainy:
        return {kind, 0.75, 0.02, 0.10};
    case WeatherKind::HeavySnowfall:
        return {kind, 0.5, 0.05, 0.30};
    case WeatherKind::Foggy:
        return {kind, 0.15, 0.10, 0.40};
    case WeatherKind::RainyNight:
        return {kind, 0.5, 0.05, 0.35};
    case WeatherKind::Night:
        return {kind, 0.8, 0.03, 0.25};
    }
    return {};
}

WeatherTable default_weather_table()
{
    WeatherTable table;
    for (auto kind : kAllWeather) {
        table[kind] = default_profile(kind);
    }
    return table;
}

} // namespace edgesignal
