#include "edgesignal/sim/detector.hpp"

#include <cmath>
#include <string>

namespace edgesignal::sim {

DetectionFrame detector_model(const LaneQueue& queue,
                              const WeatherProfile& weather,
                              RngStream& rng,
                              Timestamp captured_at,
                              double base_confidence)
{
    DetectionFrame frame;
    frame.lane_id = queue.lane_id;
    frame.captured_at = captured_at;

    const auto seen = static_cast<std::uint32_t>(std::llround(queue.queued * weather.detection_scale));
    std::uint32_t dropped = 0;
    if (weather.dropout_prob > 0.0) {
        for (std::uint32_t i = 0; i < seen; ++i) {
            dropped += rng.bernoulli(weather.dropout_prob) ? 1 : 0;
        }
    }
    frame.vehicle_count = seen - dropped;

    const double confidence = base_confidence * (1.0 - weather.ocr_confidence_penalty);
    for (std::uint32_t i = 0; i < queue.ambulances_queued; ++i) {
        frame.readings.push_back({std::string(kAmbulanceHoodText), Orientation::AsCaptured, confidence});
    }
    for (std::uint32_t i = 0; i < queue.fire_queued; ++i) {
        frame.readings.push_back({std::string(kFireSideText), Orientation::AsCaptured, confidence});
    }
    return frame;
}

} // namespace edgesignal::sim
