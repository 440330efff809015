#pragma once

#include "edgesignal/frame.hpp"
#include "edgesignal/net/clock.hpp"
#include "edgesignal/net/socket.hpp"
#include "edgesignal/net/wire.hpp"
#include "edgesignal/sim/rng.hpp"
#include "edgesignal/weather.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>
#include <vector>

namespace edgesignal::net {

/// Where an agent's frames come from.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    /// Frame captured at `now`; nullopt once the source is exhausted.
    virtual std::optional<DetectionFrame> capture(Timestamp now) = 0;
    /// Signal head for this lane changed at `at`.
    virtual void on_phase(Phase /*phase*/, Timestamp /*at*/) {}
};

/// Plays back recorded frames in order, unchanged.
class ReplaySource final : public FrameSource {
public:
    explicit ReplaySource(std::vector<DetectionFrame> frames) : frames_(frames.begin(), frames.end()) {}

    /// One DetectionFrame document per line; blank lines are skipped. Every
    /// frame must belong to `lane`. Throws ParseError with the line number.
    static ReplaySource load(const std::filesystem::path& path, LaneId lane);

    std::optional<DetectionFrame> capture(Timestamp now) override;
    std::size_t remaining() const { return frames_.size(); }

private:
    std::deque<DetectionFrame> frames_;
};

struct CameraParams {
    LaneGeometry geometry;
    /// Mean arrivals per second.
    double arrival_rate = 0.2;
    /// Mean ambulance arrivals per second.
    double ev_rate = 0.0;
    double saturation_rate = 0.5;
    WeatherProfile weather;
    double base_confidence = 0.95;
};

/// A single-lane queue fed by random arrivals and drained while the lane's
/// signal head is green, observed through the weather-degraded detector.
/// Time advances in 250 ms slots on an absolute grid, so equal call sequences
/// give equal frames.
class SimulatedCamera final : public FrameSource {
public:
    SimulatedCamera(LaneId lane, CameraParams params, std::uint64_t seed);

    std::optional<DetectionFrame> capture(Timestamp now) override;
    void on_phase(Phase phase, Timestamp at) override;

    std::uint32_t queued() const { return queued_; }

private:
    void advance(Timestamp to);

    LaneId lane_;
    CameraParams params_;
    sim::RngStream arrivals_;
    sim::RngStream detector_;
    std::optional<Timestamp> slot_start_;
    std::uint32_t queued_ = 0;
    std::uint32_t evs_ = 0;
    double credit_ = 0.0;
    Phase phase_ = Phase::Red;
};

struct AgentOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    LaneId lane_id = 1;
    Duration backoff_initial = std::chrono::milliseconds(100);
    Duration backoff_max = std::chrono::seconds(5);
    /// Connection attempts before giving up; nullopt retries forever.
    std::optional<int> max_attempts;
    /// Send each frame this long before an epoch boundary, so the decision at
    /// that boundary sees it fresh. Zero sends on the boundary itself.
    Duration lead = std::chrono::milliseconds(10);
};

/// The server refused the handshake.
class HandshakeRejected : public NetError {
public:
    using NetError::NetError;
};

struct ActuationRecord {
    std::uint64_t epoch_seq = 0;
    std::uint64_t cmd_seq = 0;
    LaneId green_lane = 0;
    Phase phase = Phase::Red;
    Duration next_sample_interval{};
    Timestamp decided_at{};
    Timestamp applied_at{};
};

/// Camera-side process for one lane: connects, streams frames at the cadence
/// the server commands, applies phase commands to a local signal head model
/// and logs when each one took effect.
class LaneAgent {
public:
    LaneAgent(AgentOptions options, FrameSource& source, Clock& clock, std::ostream* actuation_log = nullptr);
    ~LaneAgent();
    LaneAgent(const LaneAgent&) = delete;
    LaneAgent& operator=(const LaneAgent&) = delete;

    /// Live mode: runs until the source is exhausted or stop() is called,
    /// reconnecting with capped exponential backoff. Throws HandshakeRejected,
    /// or NetError once max_attempts is used up.
    void run();
    void stop();

    /// Lockstep mode: connect (with backoff) and handshake.
    void connect();
    /// Captures at clock.now() and sends. False when the source is exhausted.
    bool send_frame_now();
    /// Waits until a PhaseCmd for `epoch_seq` (or later) has been applied.
    bool wait_for_epoch(std::uint64_t epoch_seq, Duration timeout);
    void disconnect();

    bool connected() const { return connected_.load(); }
    Duration cadence() const;
    Phase phase() const;
    std::uint64_t frames_sent() const { return frames_sent_.load(); }
    std::uint64_t connections() const { return connections_.load(); }
    /// Received PhaseCmd sets without exactly one green lane.
    std::uint64_t unsafe_commands() const { return unsafe_commands_.load(); }
    std::vector<Timestamp> send_times() const;
    std::vector<ActuationRecord> actuations() const;

private:
    void handshake();
    void read_loop();
    bool send_frame(Timestamp now);
    bool sleep_real(Duration d);
    Timestamp first_send_time() const;

    AgentOptions options_;
    FrameSource& source_;
    Clock& clock_;
    std::ostream* log_;

    Socket socket_;
    std::optional<LineReader> line_reader_;
    std::mutex write_mutex_;
    Sequencer seq_;
    std::thread reader_;
    std::atomic<bool> connected_{false};
    std::atomic<bool> stopping_{false};
    std::atomic<std::uint64_t> frames_sent_{0};
    std::atomic<std::uint64_t> connections_{0};
    std::atomic<std::uint64_t> unsafe_commands_{0};

    mutable std::mutex state_mutex_;
    std::condition_variable state_cv_;
    std::optional<ServerHello> hello_;
    Duration cadence_{std::chrono::seconds(7)};
    Phase phase_ = Phase::Red;
    std::uint64_t last_epoch_ = 0;
    std::vector<Timestamp> send_times_;
    std::vector<ActuationRecord> actuations_;

    std::mutex source_mutex_;
    std::mutex log_mutex_;
};

/// Agent actuation log lines, header first.
std::string format_agent_header(LaneId lane);
std::string format_actuation(LaneId lane, const ActuationRecord& record);

} // namespace edgesignal::net
