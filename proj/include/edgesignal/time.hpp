#pragma once

#include <chrono>
#include <cstdint>

namespace edgesignal {

/// All controller and simulator time is integral microseconds. Documents carry
/// seconds as decimals and are converted at the boundary.
using Duration = std::chrono::microseconds;

/// Tag for the time base shared by the controller, simulator and network
/// harness. It has no now(); see Clock for live time sources.
struct SignalTime {
    using rep = Duration::rep;
    using period = Duration::period;
    using duration = Duration;
};

using Timestamp = std::chrono::time_point<SignalTime, Duration>;

inline double to_seconds(Duration d) { return static_cast<double>(d.count()) / 1e6; }
inline double to_seconds(Timestamp t) { return to_seconds(t.time_since_epoch()); }

Duration duration_from_seconds(double seconds);
Timestamp timestamp_from_seconds(double seconds);

} // namespace edgesignal
