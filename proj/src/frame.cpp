#include "edgesignal/frame.hpp"

namespace edgesignal {

void DetectionFrame::validate() const
{
    for (const auto& reading : readings) {
        reading.validate();
    }
}

LaneObservation observe(const DetectionFrame& frame, const ControllerConfig& config)
{
    LaneObservation observation;
    observation.lane_id = frame.lane_id;
    observation.index = compute_index(frame.vehicle_count, config.lane(frame.lane_id).geometry);
    observation.ev = detect_emergency(frame.readings, config.keywords, config.min_confidence);
    observation.last_frame_at = frame.captured_at;
    return observation;
}

bool frame_is_stale(Timestamp captured_at, Timestamp now, Duration cadence)
{
    return now - captured_at > 2 * cadence;
}

} // namespace edgesignal
