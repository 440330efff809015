#pragma once

#include "edgesignal/congestion.hpp"
#include "edgesignal/controller.hpp"
#include "edgesignal/frame.hpp"
#include "edgesignal/sim/rng.hpp"
#include "edgesignal/weather.hpp"

#include <cstdint>

namespace edgesignal::sim {

/// Queue contents as seen by the camera over one lane.
struct LaneQueue {
    LaneId lane_id = 0;
    /// All waiting vehicles, emergency vehicles included.
    std::uint32_t queued = 0;
    std::uint32_t ambulances_queued = 0;
    std::uint32_t fire_queued = 0;
    LaneGeometry geometry;

    std::uint32_t ev_queued() const { return ambulances_queued + fire_queued; }
};

/// Lettering the simulated OCR returns for each emergency vehicle kind.
inline constexpr std::string_view kAmbulanceHoodText = "ECNALUBMA";
inline constexpr std::string_view kFireSideText = "FIRE BRIGADE";

/// Simulated perception. Sees round(queued * detection_scale) vehicles and
/// loses each with dropout_prob, one Bernoulli draw per seen vehicle (no draws
/// when dropout_prob is zero). Every queued emergency vehicle yields one
/// as-captured reading at base_confidence * (1 - ocr_confidence_penalty).
DetectionFrame detector_model(const LaneQueue& queue,
                              const WeatherProfile& weather,
                              RngStream& rng,
                              Timestamp captured_at,
                              double base_confidence = 0.95);

} // namespace edgesignal::sim
