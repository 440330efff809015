#pragma once

#include <array>
#include <map>
#include <string_view>

namespace edgesignal {

enum class WeatherKind { ClearSunny, Rainy, HeavySnowfall, Foggy, RainyNight, Night };

inline constexpr std::array<WeatherKind, 6> kAllWeather = {
    WeatherKind::ClearSunny, WeatherKind::Rainy,      WeatherKind::HeavySnowfall,
    WeatherKind::Foggy,      WeatherKind::RainyNight, WeatherKind::Night,
};

std::string_view to_string(WeatherKind kind);
WeatherKind weather_from_string(std::string_view name);

/// Perception degradation under one weather condition. The detector sees
/// round(queued * detection_scale) vehicles, loses each with dropout_prob, and
/// OCR confidence drops by ocr_confidence_penalty (relative).
struct WeatherProfile {
    WeatherKind name = WeatherKind::ClearSunny;
    double detection_scale = 1.0;
    double dropout_prob = 0.0;
    double ocr_confidence_penalty = 0.0;

    /// scale in (0, 1], dropout and penalty in [0, 1).
    void validate() const;

    friend bool operator==(const WeatherProfile&, const WeatherProfile&) = default;
};

using WeatherTable = std::map<WeatherKind, WeatherProfile>;

WeatherProfile default_profile(WeatherKind kind);
WeatherTable default_weather_table();

} // namespace edgesignal
