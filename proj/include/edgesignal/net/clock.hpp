#pragma once

#include "edgesignal/time.hpp"

#include <atomic>

namespace edgesignal::net {

/// Time source for everything that stamps or waits in the network harness.
class Clock {
public:
    virtual ~Clock() = default;
    virtual Timestamp now() const = 0;
    virtual void sleep_until(Timestamp deadline) = 0;
    void sleep_for(Duration d) { sleep_until(now() + d); }
};

/// Wall clock, microseconds since the Unix epoch. Processes on one host agree.
class SystemClock final : public Clock {
public:
    Timestamp now() const override;
    void sleep_until(Timestamp deadline) override;
};

/// Logical time for lockstep runs. Sleeping jumps the clock forward.
class ManualClock final : public Clock {
public:
    explicit ManualClock(Timestamp start = {}) : now_(start.time_since_epoch().count()) {}

    Timestamp now() const override { return Timestamp{Duration{now_.load()}}; }
    void sleep_until(Timestamp deadline) override;
    void set(Timestamp t) { now_.store(t.time_since_epoch().count()); }
    void advance(Duration d) { now_.fetch_add(d.count()); }

private:
    std::atomic<Duration::rep> now_;
};

} // namespace edgesignal::net
