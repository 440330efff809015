#include "edgesignal/net/server.hpp"

#include "edgesignal/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace edgesignal::net {

struct EdgeServer::Connection {
    explicit Connection(Socket s) : socket(std::move(s)) {}

    Socket socket;
    std::mutex write_mutex;
    Sequencer seq;
    std::optional<LaneId> lane;
    std::uint64_t last_rx_seq = 0;
    std::thread reader;
};

EdgeServer::EdgeServer(ServerOptions options, Clock& clock, std::ostream* decision_log)
    : options_(std::move(options)),
      clock_(clock),
      engine_(options_.config.controller, clock.now()),
      epoch_interval_(options_.config.epoch_interval),
      origin_(clock.now())
{
    options_.config.validate();
    if (decision_log != nullptr) {
        log_.emplace(*decision_log);
    }
    for (const auto id : options_.config.controller.lane_ids()) {
        auto& view = lanes_[id];
        view.cadence = options_.config.controller.sample_interval_low;
        view.previous_cadence = view.cadence;
    }
    if (!options_.cloud_endpoint.empty()) {
        if (options_.config_path.empty()) {
            spdlog::warn("cloud endpoint given without a local config path; config sync disabled");
        } else {
            syncer_.emplace(options_.cloud_endpoint, options_.config_path);
        }
    }
}

EdgeServer::~EdgeServer()
{
    stop();
}

void EdgeServer::start()
{
    listener_ = Listener::bind(options_.host, options_.port);
    port_ = listener_->port();
    if (log_) {
        LogHeader header;
        header.source = "edge-server";
        header.config = options_.config;
        header.mode = options_.emulated_rtt > Duration::zero() ? "cloud" : "edge";
        header.emulated_rtt = options_.emulated_rtt;
        log_->write_header(header);
    }
    spdlog::info("edge server listening on {}:{}", options_.host, port_);
    accept_thread_ = std::thread([this] { accept_loop(); });
    if (options_.live_epochs) {
        epoch_thread_ = std::thread([this] { epoch_loop(); });
    }
    if (syncer_ && options_.live_epochs) {
        sync_thread_ = std::thread([this] { sync_loop(); });
    }
}

void EdgeServer::stop()
{
    {
        std::lock_guard lock(stop_mutex_);
        if (stopping_.exchange(true)) {
            return;
        }
    }
    stop_cv_.notify_all();
    for (auto* t : {&accept_thread_, &epoch_thread_, &sync_thread_}) {
        if (t->joinable()) {
            t->join();
        }
    }
    if (listener_) {
        listener_->close();
    }
    std::vector<std::shared_ptr<Connection>> all;
    {
        std::lock_guard lock(conn_mutex_);
        all = connections_;
    }
    for (auto& conn : all) {
        conn->socket.shutdown();
    }
    for (auto& conn : all) {
        if (conn->reader.joinable()) {
            conn->reader.join();
        }
    }
}

void EdgeServer::wait()
{
    std::unique_lock lock(stop_mutex_);
    stop_cv_.wait(lock, [this] { return stopping_.load(); });
}

void EdgeServer::accept_loop()
{
    while (!stopping_) {
        auto socket = listener_->accept(std::chrono::milliseconds(100));
        if (!socket) {
            continue;
        }
        auto conn = std::make_shared<Connection>(std::move(*socket));
        std::lock_guard lock(conn_mutex_);
        connections_.push_back(conn);
        conn->reader = std::thread([this, conn] { serve_connection(conn); });
    }
}

void EdgeServer::send(Connection& conn, MessageType type, Json payload)
{
    std::lock_guard lock(conn.write_mutex);
    send_locked(conn, type, std::move(payload));
}

void EdgeServer::send_locked(Connection& conn, MessageType type, Json payload)
{
    WireMessage message;
    message.type = type;
    message.seq = conn.seq.next();
    message.sent_at = clock_.now();
    message.lane_id = conn.lane;
    message.payload = std::move(payload);
    const auto line = encode(message);
    conn.socket.send_all(line);
    tx_bytes_ += line.size();
}

void EdgeServer::reject(Connection& conn, const std::string& reason, bool malformed)
{
    spdlog::warn("dropping connection{}: {}", conn.lane ? " for lane " + std::to_string(*conn.lane) : "", reason);
    {
        std::lock_guard lock(stats_mutex_);
        (malformed ? stats_.malformed : stats_.rejected) += 1;
    }
    try {
        send(conn, MessageType::Error, {{"message", reason}});
    } catch (const NetError&) {
    }
}

void EdgeServer::drop(const std::shared_ptr<Connection>& conn)
{
    {
        std::lock_guard lock(conn_mutex_);
        if (conn->lane) {
            const auto it = agents_.find(*conn->lane);
            if (it != agents_.end() && it->second == conn) {
                agents_.erase(it);
                spdlog::info("lane {} disconnected", *conn->lane);
            }
        }
    }
    conn->socket.shutdown();
    agents_cv_.notify_all();
}

void EdgeServer::serve_connection(std::shared_ptr<Connection> conn)
{
    const auto lanes = options_.config.controller.lane_ids();
    LineReader reader(conn->socket);
    try {
        while (auto line = reader.read_line()) {
            rx_bytes_ += line->size() + 1;
            const Timestamp received_at = clock_.now();
            WireMessage message;
            try {
                message = decode(*line);
            } catch (const InputError& e) {
                reject(*conn, e.what(), true);
                break;
            }
            if (message.schema != kSchemaVersion) {
                reject(*conn, "schema " + std::to_string(message.schema) + " is not supported", false);
                break;
            }

            if (!conn->lane) {
                if (message.type != MessageType::Hello || !message.lane_id) {
                    reject(*conn, "expected Hello with a lane_id", true);
                    break;
                }
                const LaneId lane = *message.lane_id;
                if (std::find(lanes.begin(), lanes.end(), lane) == lanes.end()) {
                    reject(*conn, "lane " + std::to_string(lane) + " is not configured", false);
                    break;
                }
                std::unique_lock write_lock(conn->write_mutex);
                {
                    std::lock_guard lock(conn_mutex_);
                    if (agents_.contains(lane)) {
                        write_lock.unlock();
                        reject(*conn, "lane " + std::to_string(lane) + " already has an agent", false);
                        break;
                    }
                    agents_[lane] = conn;
                }
                conn->lane = lane;
                conn->last_rx_seq = message.seq;
                send_locked(*conn, MessageType::Hello, to_payload(ServerHello{epoch_interval_, origin_}));
                write_lock.unlock();
                {
                    std::lock_guard lock(stats_mutex_);
                    stats_.accepted += 1;
                }
                agents_cv_.notify_all();
                spdlog::info("lane {} connected", lane);
                continue;
            }

            if (message.seq <= conn->last_rx_seq) {
                reject(*conn, "sequence number did not increase", true);
                break;
            }
            if (message.seq > conn->last_rx_seq + 1) {
                std::lock_guard lock(stats_mutex_);
                stats_.seq_gaps += message.seq - conn->last_rx_seq - 1;
            }
            conn->last_rx_seq = message.seq;

            if (message.type == MessageType::Heartbeat) {
                std::lock_guard lock(stats_mutex_);
                stats_.heartbeats += 1;
                continue;
            }
            if (message.type != MessageType::Frame) {
                reject(*conn, "unexpected " + std::string(to_string(message.type)) + " from an agent", true);
                break;
            }
            DetectionFrame frame;
            try {
                frame = frame_from_json(message.payload, "Frame.payload");
                frame.validate();
            } catch (const InputError& e) {
                reject(*conn, e.what(), true);
                break;
            }
            if (frame.lane_id != *conn->lane) {
                reject(*conn, "frame for lane " + std::to_string(frame.lane_id) + " on the connection for lane " +
                                  std::to_string(*conn->lane),
                       true);
                break;
            }
            {
                std::lock_guard lock(inbound_mutex_);
                inbound_.push_back({frame.lane_id, message.seq, received_at, line->size() + 1, std::move(frame)});
                frames_enqueued_ += 1;
            }
            {
                std::lock_guard lock(stats_mutex_);
                stats_.frames += 1;
            }
            inbound_cv_.notify_all();
        }
    } catch (const NetError& e) {
        if (!stopping_) {
            spdlog::info("connection closed: {}", e.what());
        }
    }
    drop(conn);
}

EpochRecord EdgeServer::tick()
{
    std::optional<ControllerConfig> config_change;
    {
        std::lock_guard lock(config_mutex_);
        if (pending_config_) {
            try {
                engine_.set_config(pending_config_->controller);
                config_change = pending_config_->controller;
            } catch (const std::exception& e) {
                spdlog::warn("new config not applied: {}", e.what());
            }
            pending_config_.reset();
        }
    }

    const Timestamp now = clock_.now();
    std::vector<Inbound> arrived;
    {
        std::lock_guard lock(inbound_mutex_);
        arrived.swap(inbound_);
    }
    std::stable_sort(arrived.begin(), arrived.end(),
                     [](const Inbound& a, const Inbound& b) { return a.lane_id < b.lane_id; });

    EpochRecord record;
    for (auto& in : arrived) {
        record.ingest.push_back({in.lane_id, in.seq, in.received_at, in.bytes});
        auto& view = lanes_[in.lane_id];
        view.frame = std::move(in.frame);
        view.received_at = in.received_at;
        view.previous_cadence = view.cadence;
    }

    std::vector<LaneObservation> observations;
    for (const auto& [id, view] : lanes_) {
        LaneObservation obs;
        obs.lane_id = id;
        obs.stale = true;
        if (view.frame) {
            obs = observe(*view.frame, engine_.config());
            obs.last_frame_at = view.received_at;
            obs.stale = frame_is_stale(view.received_at, now, std::max(view.cadence, view.previous_cadence));
        }
        observations.push_back(obs);
    }

    const Duration rtt = options_.emulated_rtt;
    if (rtt > Duration::zero()) {
        clock_.sleep_for(rtt / 2);
    }
    const EpochResult result = engine_.run_epoch(now, observations);
    if (rtt > Duration::zero()) {
        clock_.sleep_for(rtt - rtt / 2);
    }
    const Timestamp decided_at = clock_.now();

    for (auto& [id, view] : lanes_) {
        const Duration cadence = result.decision.next_sample_interval.at(id);
        if (cadence != view.cadence) {
            view.previous_cadence = view.cadence;
            view.cadence = cadence;
        }
    }

    record.seq = ++epoch_seq_;
    record.snapshot = result.snapshot;
    record.current_green = result.current_green;
    record.green_elapsed = result.green_elapsed;
    record.decision = result.decision;
    record.decided_at = decided_at;
    record.wire = wire_counters();
    record.config_change = std::move(config_change);
    if (log_) {
        log_->write_epoch(record);
    }

    const Json payload = to_payload(phase_commands(record.seq, decided_at, result.decision));
    std::vector<std::shared_ptr<Connection>> targets;
    {
        std::lock_guard lock(conn_mutex_);
        for (const auto& [lane, conn] : agents_) {
            targets.push_back(conn);
        }
    }
    std::uint64_t failures = 0;
    for (const auto& conn : targets) {
        try {
            send(*conn, MessageType::PhaseCmd, payload);
        } catch (const NetError&) {
            ++failures;
            conn->socket.shutdown();
        }
    }
    {
        std::lock_guard lock(stats_mutex_);
        stats_.epochs += 1;
        stats_.broadcast_failures += failures;
    }
    return record;
}

void EdgeServer::epoch_loop()
{
    Timestamp next = origin_;
    std::unique_lock lock(stop_mutex_);
    while (!stopping_) {
        const auto remaining = next - clock_.now();
        if (remaining > Duration::zero() &&
            stop_cv_.wait_for(lock, remaining, [this] { return stopping_.load(); })) {
            break;
        }
        lock.unlock();
        try {
            tick();
        } catch (const std::exception& e) {
            spdlog::error("epoch failed: {}", e.what());
        }
        lock.lock();
        next += epoch_interval_;
        while (next <= clock_.now()) {
            next += epoch_interval_;
        }
    }
}

void EdgeServer::sync_loop()
{
    std::unique_lock lock(stop_mutex_);
    while (!stopping_) {
        lock.unlock();
        sync_config_now();
        lock.lock();
        if (stop_cv_.wait_for(lock, options_.sync_interval, [this] { return stopping_.load(); })) {
            break;
        }
    }
}

std::optional<SyncOutcome> EdgeServer::sync_config_now()
{
    if (!syncer_) {
        return std::nullopt;
    }
    try {
        auto outcome = syncer_->sync_once();
        if (outcome.status == SyncStatus::Updated) {
            apply_config(outcome.config);
        }
        return outcome;
    } catch (const std::exception& e) {
        spdlog::warn("config sync failed: {}", e.what());
        return std::nullopt;
    }
}

void EdgeServer::apply_config(const SystemConfig& config)
{
    std::lock_guard lock(config_mutex_);
    pending_config_ = config;
}

bool EdgeServer::wait_for_frames(std::uint64_t total, Duration timeout)
{
    std::unique_lock lock(inbound_mutex_);
    return inbound_cv_.wait_for(lock, timeout, [&] { return frames_enqueued_ >= total; });
}

bool EdgeServer::wait_for_agents(std::size_t count, Duration timeout)
{
    std::unique_lock lock(conn_mutex_);
    return agents_cv_.wait_for(lock, timeout, [&] { return agents_.size() >= count; });
}

ServerStats EdgeServer::stats() const
{
    std::lock_guard lock(stats_mutex_);
    return stats_;
}

std::vector<LaneId> EdgeServer::connected_lanes() const
{
    std::lock_guard lock(conn_mutex_);
    std::vector<LaneId> lanes;
    for (const auto& [lane, conn] : agents_) {
        lanes.push_back(lane);
    }
    return lanes;
}

} // namespace edgesignal::net
