#pragma once

#include "edgesignal/config.hpp"
#include "edgesignal/decision_log.hpp"
#include "edgesignal/net/clock.hpp"
#include "edgesignal/net/cloud.hpp"
#include "edgesignal/net/socket.hpp"
#include "edgesignal/net/wire.hpp"

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace edgesignal::net {

struct ServerOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    SystemConfig config;
    /// Non-zero emulates a cloud controller: half the round trip is spent
    /// before deciding and half after, and the log header says "cloud".
    Duration emulated_rtt{0};
    /// Run epochs on a background thread; otherwise the caller drives tick().
    bool live_epochs = true;
    /// Cloud endpoint for config_sync; empty disables syncing.
    std::string cloud_endpoint;
    std::filesystem::path config_path;
    Duration sync_interval = std::chrono::minutes(5);
};

struct ServerStats {
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
    std::uint64_t malformed = 0;
    std::uint64_t frames = 0;
    std::uint64_t heartbeats = 0;
    std::uint64_t seq_gaps = 0;
    std::uint64_t epochs = 0;
    std::uint64_t broadcast_failures = 0;
};

/// The intersection-local decision node. Connection threads feed one inbound
/// queue; tick() is the only consumer and the only caller of the controller.
class EdgeServer {
public:
    /// `decision_log` may be null. The clock must outlive the server.
    EdgeServer(ServerOptions options, Clock& clock, std::ostream* decision_log = nullptr);
    ~EdgeServer();
    EdgeServer(const EdgeServer&) = delete;
    EdgeServer& operator=(const EdgeServer&) = delete;

    /// Binds, writes the log header and starts threads. Throws NetError on bind failure.
    void start();
    void stop();
    /// Blocks until stop().
    void wait();

    std::uint16_t port() const { return port_; }

    /// One decision epoch at clock.now(): drain frames, decide, log, broadcast.
    EpochRecord tick();

    /// Lockstep helpers; false on timeout.
    bool wait_for_frames(std::uint64_t total, Duration timeout);
    bool wait_for_agents(std::size_t count, Duration timeout);

    /// Queues a new config for the next epoch. The lane set must not change.
    void apply_config(const SystemConfig& config);
    /// One synchronous sync attempt; Updated results are queued as by apply_config.
    std::optional<SyncOutcome> sync_config_now();

    ServerStats stats() const;
    std::vector<LaneId> connected_lanes() const;
    WireCounters wire_counters() const { return {rx_bytes_.load(), tx_bytes_.load()}; }

private:
    struct Connection;
    struct Inbound {
        LaneId lane_id = 0;
        std::uint64_t seq = 0;
        Timestamp received_at{};
        std::uint64_t bytes = 0;
        DetectionFrame frame;
    };
    struct LaneView {
        std::optional<DetectionFrame> frame;
        Timestamp received_at{};
        Duration cadence{};
        Duration previous_cadence{};
    };

    void accept_loop();
    void serve_connection(std::shared_ptr<Connection> conn);
    void epoch_loop();
    void sync_loop();
    void send(Connection& conn, MessageType type, Json payload);
    /// Caller holds conn.write_mutex.
    void send_locked(Connection& conn, MessageType type, Json payload);
    void reject(Connection& conn, const std::string& reason, bool malformed);
    void drop(const std::shared_ptr<Connection>& conn);

    ServerOptions options_;
    Clock& clock_;
    std::optional<DecisionLogWriter> log_;
    DecisionEngine engine_;
    Duration epoch_interval_;
    Timestamp origin_{};
    std::map<LaneId, LaneView> lanes_;
    std::uint64_t epoch_seq_ = 0;

    std::optional<Listener> listener_;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    std::thread epoch_thread_;
    std::thread sync_thread_;
    std::optional<ConfigSyncer> syncer_;

    mutable std::mutex conn_mutex_;
    std::map<LaneId, std::shared_ptr<Connection>> agents_;
    std::vector<std::shared_ptr<Connection>> connections_;
    std::condition_variable agents_cv_;

    mutable std::mutex inbound_mutex_;
    std::vector<Inbound> inbound_;
    std::uint64_t frames_enqueued_ = 0;
    std::condition_variable inbound_cv_;

    std::mutex config_mutex_;
    std::optional<SystemConfig> pending_config_;

    std::mutex stop_mutex_;
    std::condition_variable stop_cv_;

    std::atomic<std::uint64_t> rx_bytes_{0};
    std::atomic<std::uint64_t> tx_bytes_{0};
    mutable std::mutex stats_mutex_;
    ServerStats stats_;
};

} // namespace edgesignal::net
