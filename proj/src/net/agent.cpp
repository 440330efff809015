#include "edgesignal/net/agent.hpp"

#include "edgesignal/codec.hpp"
#include "edgesignal/config.hpp"
#include "edgesignal/errors.hpp"
#include "edgesignal/sim/detector.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

namespace edgesignal::net {

namespace {

constexpr Duration kSlot = std::chrono::milliseconds(250);

} // namespace

// ---------------------------------------------------------------------------
// Frame sources

ReplaySource ReplaySource::load(const std::filesystem::path& path, LaneId lane)
{
    const std::string text = read_file(path);
    std::vector<DetectionFrame> frames;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        ++line_no;
        auto end = text.find('\n', pos);
        if (end == std::string::npos) {
            end = text.size();
        }
        const std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        try {
            auto frame = frame_from_json(Json::parse(line), "frame");
            frame.validate();
            if (frame.lane_id != lane) {
                throw InputError("frame is for lane " + std::to_string(frame.lane_id) + ", agent runs lane " +
                                 std::to_string(lane));
            }
            frames.push_back(std::move(frame));
        } catch (const Json::exception& e) {
            throw ParseError(line_no, e.what());
        } catch (const InputError& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return ReplaySource(std::move(frames));
}

std::optional<DetectionFrame> ReplaySource::capture(Timestamp)
{
    if (frames_.empty()) {
        return std::nullopt;
    }
    auto frame = std::move(frames_.front());
    frames_.pop_front();
    return frame;
}

SimulatedCamera::SimulatedCamera(LaneId lane, CameraParams params, std::uint64_t seed)
    : lane_(lane),
      params_(params),
      arrivals_(sim::stream_seed(seed, 2 * std::uint64_t{lane})),
      detector_(sim::stream_seed(seed, 2 * std::uint64_t{lane} + 1))
{
}

void SimulatedCamera::advance(Timestamp to)
{
    if (!slot_start_) {
        slot_start_ = Timestamp{(to.time_since_epoch() / kSlot) * kSlot};
        return;
    }
    const double slot_s = to_seconds(kSlot);
    while (*slot_start_ + kSlot <= to) {
        const double expected = params_.arrival_rate * slot_s;
        const double whole = std::floor(expected);
        queued_ += static_cast<std::uint32_t>(whole) + (arrivals_.bernoulli(expected - whole) ? 1 : 0);
        if (params_.ev_rate > 0.0 && arrivals_.bernoulli(params_.ev_rate * slot_s)) {
            queued_ += 1;
            evs_ += 1;
        }
        if (phase_ == Phase::Green) {
            credit_ += params_.saturation_rate * slot_s;
            while (credit_ >= 1.0 && queued_ > 0) {
                queued_ -= 1;
                if (evs_ > 0) {
                    evs_ -= 1;
                }
                credit_ -= 1.0;
            }
            if (queued_ == 0) {
                credit_ = std::min(credit_, 1.0);
            }
        }
        *slot_start_ += kSlot;
    }
}

std::optional<DetectionFrame> SimulatedCamera::capture(Timestamp now)
{
    advance(now);
    const sim::LaneQueue queue{lane_, queued_, evs_, 0, params_.geometry};
    return sim::detector_model(queue, params_.weather, detector_, now, params_.base_confidence);
}

void SimulatedCamera::on_phase(Phase phase, Timestamp at)
{
    advance(at);
    phase_ = phase;
    if (phase == Phase::Red) {
        credit_ = 0.0;
    }
}

// ---------------------------------------------------------------------------
// Agent

std::string format_agent_header(LaneId lane)
{
    return Json{{"kind", "header"},
                {"schema", kSchemaVersion},
                {"tool_version", std::string(kToolVersion)},
                {"source", "agent"},
                {"lane_id", lane}}
        .dump();
}

std::string format_actuation(LaneId lane, const ActuationRecord& r)
{
    return Json{{"kind", "actuation"},
                {"schema", kSchemaVersion},
                {"lane_id", lane},
                {"epoch_seq", r.epoch_seq},
                {"cmd_seq", r.cmd_seq},
                {"green_lane", r.green_lane},
                {"phase", std::string(to_string(r.phase))},
                {"next_sample_interval_s", to_seconds(r.next_sample_interval)},
                {"decided_at", to_seconds(r.decided_at)},
                {"applied_at", to_seconds(r.applied_at)}}
        .dump();
}

LaneAgent::LaneAgent(AgentOptions options, FrameSource& source, Clock& clock, std::ostream* actuation_log)
    : options_(std::move(options)), source_(source), clock_(clock), log_(actuation_log)
{
    if (log_ != nullptr) {
        *log_ << format_agent_header(options_.lane_id) << '\n';
        log_->flush();
    }
}

LaneAgent::~LaneAgent()
{
    stop();
    disconnect();
}

bool LaneAgent::sleep_real(Duration d)
{
    std::unique_lock lock(state_mutex_);
    return !state_cv_.wait_for(lock, d, [this] { return stopping_.load(); });
}

void LaneAgent::connect()
{
    disconnect();
    Duration backoff = options_.backoff_initial;
    int attempts = 0;
    while (true) {
        if (stopping_) {
            throw NetError("agent stopped");
        }
        ++attempts;
        try {
            socket_ = connect_tcp(options_.host, options_.port);
            handshake();
            break;
        } catch (const HandshakeRejected&) {
            socket_.close();
            throw;
        } catch (const NetError& e) {
            socket_.close();
            if (options_.max_attempts && attempts >= *options_.max_attempts) {
                throw;
            }
            spdlog::info("lane {}: {}; retrying in {} ms", options_.lane_id, e.what(),
                         std::chrono::duration_cast<std::chrono::milliseconds>(backoff).count());
            if (!sleep_real(backoff)) {
                throw NetError("agent stopped");
            }
            backoff = std::min(backoff * 2, options_.backoff_max);
        }
    }
    connected_ = true;
    connections_ += 1;
    reader_ = std::thread([this] { read_loop(); });
}

void LaneAgent::handshake()
{
    seq_.reset();
    WireMessage hello;
    hello.type = MessageType::Hello;
    hello.seq = seq_.next();
    hello.sent_at = clock_.now();
    hello.lane_id = options_.lane_id;
    socket_.send_all(encode(hello));

    line_reader_.emplace(socket_);
    const auto line = line_reader_->read_line();
    if (!line) {
        throw NetError("server closed the connection during the handshake");
    }
    WireMessage reply;
    try {
        reply = decode(*line);
    } catch (const InputError& e) {
        throw NetError(std::string("bad handshake reply: ") + e.what());
    }
    if (reply.type == MessageType::Error) {
        throw HandshakeRejected("server rejected lane " + std::to_string(options_.lane_id) + ": " +
                                reply.payload.value("message", std::string("no reason given")));
    }
    if (reply.type != MessageType::Hello || reply.schema != kSchemaVersion) {
        throw NetError("unexpected handshake reply");
    }
    try {
        std::lock_guard lock(state_mutex_);
        hello_ = server_hello_from_payload(reply.payload);
    } catch (const InputError& e) {
        throw NetError(std::string("bad handshake reply: ") + e.what());
    }
}

void LaneAgent::read_loop()
{
    try {
        while (auto line = line_reader_->read_line()) {
            const Timestamp applied_at = clock_.now();
            WireMessage message;
            try {
                message = decode(*line);
            } catch (const InputError& e) {
                spdlog::warn("lane {}: dropping malformed server message: {}", options_.lane_id, e.what());
                break;
            }
            if (message.type == MessageType::Error) {
                spdlog::warn("lane {}: server error: {}", options_.lane_id,
                             message.payload.value("message", std::string("?")));
                continue;
            }
            if (message.type != MessageType::PhaseCmd) {
                continue;
            }
            PhaseCommandSet commands;
            try {
                commands = phase_commands_from_payload(message.payload);
            } catch (const InputError& e) {
                spdlog::warn("lane {}: bad PhaseCmd: {}", options_.lane_id, e.what());
                continue;
            }
            if (!commands.single_green()) {
                unsafe_commands_ += 1;
                spdlog::warn("lane {}: ignoring epoch {} command without exactly one green", options_.lane_id,
                             commands.epoch_seq);
                continue;
            }
            const auto mine = commands.lanes.find(options_.lane_id);
            if (mine == commands.lanes.end()) {
                continue;
            }
            ActuationRecord record{commands.epoch_seq, message.seq,       commands.green_lane,
                                   mine->second.phase, mine->second.next_sample_interval,
                                   commands.decided_at, applied_at};
            bool changed = false;
            {
                std::lock_guard lock(state_mutex_);
                changed = phase_ != record.phase || actuations_.empty();
            }
            if (changed) {
                std::lock_guard lock(source_mutex_);
                source_.on_phase(record.phase, applied_at);
            }
            {
                std::lock_guard lock(state_mutex_);
                phase_ = record.phase;
                cadence_ = record.next_sample_interval;
                last_epoch_ = std::max(last_epoch_, record.epoch_seq);
                actuations_.push_back(record);
            }
            if (log_ != nullptr) {
                std::lock_guard lock(log_mutex_);
                *log_ << format_actuation(options_.lane_id, record) << '\n';
                log_->flush();
            }
            state_cv_.notify_all();
        }
    } catch (const NetError& e) {
        if (!stopping_) {
            spdlog::info("lane {}: connection lost: {}", options_.lane_id, e.what());
        }
    }
    connected_ = false;
    state_cv_.notify_all();
}

void LaneAgent::disconnect()
{
    connected_ = false;
    socket_.shutdown();
    if (reader_.joinable()) {
        reader_.join();
    }
    socket_.close();
    line_reader_.reset();
}

void LaneAgent::stop()
{
    {
        std::lock_guard lock(state_mutex_);
        stopping_ = true;
    }
    state_cv_.notify_all();
    socket_.shutdown();
}

bool LaneAgent::send_frame(Timestamp now)
{
    std::optional<DetectionFrame> frame;
    {
        std::lock_guard lock(source_mutex_);
        frame = source_.capture(now);
    }
    if (!frame) {
        return false;
    }
    {
        std::lock_guard lock(write_mutex_);
        WireMessage message;
        message.type = MessageType::Frame;
        message.seq = seq_.next();
        message.sent_at = clock_.now();
        message.lane_id = options_.lane_id;
        message.payload = to_json(*frame);
        socket_.send_all(encode(message));
    }
    frames_sent_ += 1;
    std::lock_guard lock(state_mutex_);
    send_times_.push_back(now);
    return true;
}

bool LaneAgent::send_frame_now()
{
    return send_frame(clock_.now());
}

bool LaneAgent::wait_for_epoch(std::uint64_t epoch_seq, Duration timeout)
{
    std::unique_lock lock(state_mutex_);
    return state_cv_.wait_for(lock, timeout, [&] { return last_epoch_ >= epoch_seq || !connected_; }) &&
           last_epoch_ >= epoch_seq;
}

Timestamp LaneAgent::first_send_time() const
{
    const Timestamp now = clock_.now();
    std::lock_guard lock(state_mutex_);
    if (!hello_) {
        return now;
    }
    const Duration interval = hello_->epoch_interval;
    const Duration ahead = now + options_.lead - hello_->epoch_origin;
    auto k = ahead.count() <= 0 ? 0 : (ahead.count() + interval.count() - 1) / interval.count();
    return hello_->epoch_origin + interval * k - options_.lead;
}

void LaneAgent::run()
{
    while (!stopping_) {
        try {
            connect();
        } catch (const HandshakeRejected&) {
            throw;
        } catch (const NetError&) {
            if (stopping_) {
                return;
            }
            throw;
        }
        std::optional<Timestamp> last_sent;
        const Timestamp first = first_send_time();
        try {
            while (!stopping_ && connected_) {
                Timestamp target{};
                {
                    std::unique_lock lock(state_mutex_);
                    while (true) {
                        target = last_sent ? *last_sent + cadence_ : first;
                        const auto remaining = target - clock_.now();
                        if (stopping_ || !connected_ || remaining <= Duration::zero()) {
                            break;
                        }
                        state_cv_.wait_for(lock, std::min<Duration>(remaining, std::chrono::milliseconds(50)));
                    }
                }
                if (stopping_ || !connected_) {
                    break;
                }
                if (!send_frame(clock_.now())) {
                    spdlog::info("lane {}: frame source exhausted after {} frames", options_.lane_id,
                                 frames_sent_.load());
                    disconnect();
                    return;
                }
                last_sent = target;
            }
        } catch (const NetError& e) {
            spdlog::info("lane {}: send failed: {}", options_.lane_id, e.what());
        }
        disconnect();
    }
}

Duration LaneAgent::cadence() const
{
    std::lock_guard lock(state_mutex_);
    return cadence_;
}

Phase LaneAgent::phase() const
{
    std::lock_guard lock(state_mutex_);
    return phase_;
}

std::vector<Timestamp> LaneAgent::send_times() const
{
    std::lock_guard lock(state_mutex_);
    return send_times_;
}

std::vector<ActuationRecord> LaneAgent::actuations() const
{
    std::lock_guard lock(state_mutex_);
    return actuations_;
}

} // namespace edgesignal::net
