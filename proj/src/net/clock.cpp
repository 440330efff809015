#include "edgesignal/net/clock.hpp"

#include <thread>

namespace edgesignal::net {

Timestamp SystemClock::now() const
{
    const auto since_epoch = std::chrono::system_clock::now().time_since_epoch();
    return Timestamp{std::chrono::duration_cast<Duration>(since_epoch)};
}

void SystemClock::sleep_until(Timestamp deadline)
{
    const auto remaining = deadline - now();
    if (remaining > Duration::zero()) {
        std::this_thread::sleep_for(remaining);
    }
}

void ManualClock::sleep_until(Timestamp deadline)
{
    auto current = now_.load();
    const auto target = deadline.time_since_epoch().count();
    while (current < target && !now_.compare_exchange_weak(current, target)) {
    }
}

} // namespace edgesignal::net
