#pragma once

#include "edgesignal/controller.hpp"
#include "edgesignal/emergency.hpp"
#include "edgesignal/time.hpp"

#include <cstdint>
#include <vector>

namespace edgesignal {

/// One perception sample for one lane: what the camera pipeline saw.
struct DetectionFrame {
    LaneId lane_id = 0;
    std::uint32_t vehicle_count = 0;
    std::vector<OcrReading> readings;
    Timestamp captured_at{};

    void validate() const;

    friend bool operator==(const DetectionFrame&, const DetectionFrame&) = default;
};

/// Index and emergency count for a frame under the lane's configured geometry.
LaneObservation observe(const DetectionFrame& frame, const ControllerConfig& config);

/// A frame is stale once it is older than twice the lane's sampling cadence.
/// Pass the longer of the previous and current cadence so a freshly shortened
/// cadence does not flag a frame that was requested under the old one.
bool frame_is_stale(Timestamp captured_at, Timestamp now, Duration cadence);

} // namespace edgesignal
