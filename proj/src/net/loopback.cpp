#include "edgesignal/net/loopback.hpp"

#include "edgesignal/net/agent.hpp"

#include <memory>
#include <set>
#include <sstream>

namespace edgesignal::net {

namespace {

constexpr Duration kStepTimeout = std::chrono::seconds(10);

struct AgentSlot {
    LaneId lane = 0;
    std::unique_ptr<SimulatedCamera> camera;
    std::ostringstream log;
    std::unique_ptr<LaneAgent> agent;
    std::thread thread;
    bool alive = true;
    Timestamp next_due{};
};

} // namespace

std::vector<std::string> LoopbackResult::agent_log_list() const
{
    std::vector<std::string> logs;
    for (const auto& [lane, text] : agent_logs) {
        logs.push_back(text);
    }
    return logs;
}

LoopbackResult run_loopback(const LoopbackOptions& options)
{
    options.config.validate();
    ManualClock manual;
    SystemClock system;
    Clock& clock = options.lockstep ? static_cast<Clock&>(manual) : static_cast<Clock&>(system);

    std::ostringstream decision_log;
    ServerOptions server_options;
    server_options.config = options.config;
    server_options.emulated_rtt = options.emulated_rtt;
    server_options.live_epochs = !options.lockstep;
    server_options.cloud_endpoint = options.cloud_endpoint;
    server_options.config_path = options.config_path;
    EdgeServer server(server_options, clock, &decision_log);
    server.start();

    std::vector<std::unique_ptr<AgentSlot>> slots;
    for (const auto& lane : options.config.controller.lanes) {
        auto slot = std::make_unique<AgentSlot>();
        slot->lane = lane.lane_id;
        CameraParams params;
        params.geometry = lane.geometry;
        const auto rate = options.arrival_rates.find(lane.lane_id);
        params.arrival_rate = rate == options.arrival_rates.end() ? 0.2 : rate->second;
        params.ev_rate = options.ev_rate;
        params.saturation_rate = options.config.simulation.saturation_rate;
        params.weather = options.config.weather.at(options.weather);
        params.base_confidence = options.config.simulation.base_ocr_confidence;
        slot->camera = std::make_unique<SimulatedCamera>(lane.lane_id, params, options.seed);
        AgentOptions agent_options;
        agent_options.port = server.port();
        agent_options.lane_id = lane.lane_id;
        agent_options.max_attempts = 20;
        agent_options.lead = options.lockstep ? Duration::zero() : options.lead;
        slot->agent = std::make_unique<LaneAgent>(agent_options, *slot->camera, clock, &slot->log);
        slots.push_back(std::move(slot));
    }

    LoopbackResult result;
    if (options.lockstep) {
        for (auto& slot : slots) {
            slot->agent->connect();
        }
        if (!server.wait_for_agents(slots.size(), kStepTimeout)) {
            throw NetError("agents did not all connect");
        }
        const Duration epoch = options.config.epoch_interval;
        const Duration sync_interval = server_options.sync_interval;
        std::uint64_t sent = 0;
        for (std::uint64_t k = 0; epoch * static_cast<Duration::rep>(k) < options.duration; ++k) {
            const Timestamp now{epoch * static_cast<Duration::rep>(k)};
            manual.set(now);
            if (!options.cloud_endpoint.empty() && now.time_since_epoch() % sync_interval == Duration::zero()) {
                server.sync_config_now();
            }
            for (auto& slot : slots) {
                if (slot->alive && now >= slot->next_due) {
                    slot->agent->send_frame_now();
                    ++sent;
                }
            }
            if (!server.wait_for_frames(sent, kStepTimeout)) {
                throw NetError("frames did not reach the server");
            }
            const EpochRecord record = server.tick();
            for (auto& slot : slots) {
                if (!slot->alive) {
                    continue;
                }
                if (!slot->agent->wait_for_epoch(record.seq, kStepTimeout)) {
                    throw NetError("lane " + std::to_string(slot->lane) + " missed epoch " +
                                   std::to_string(record.seq));
                }
                if (now >= slot->next_due) {
                    slot->next_due = now + slot->agent->cadence();
                }
            }
            for (const auto& [after, lane] : options.disconnect_after) {
                if (after == record.seq) {
                    for (auto& slot : slots) {
                        if (slot->lane == lane && slot->alive) {
                            slot->agent->disconnect();
                            slot->alive = false;
                        }
                    }
                }
            }
        }
        for (auto& slot : slots) {
            slot->agent->disconnect();
        }
    } else {
        for (auto& slot : slots) {
            slot->thread = std::thread([&slot] {
                try {
                    slot->agent->run();
                } catch (const std::exception&) {
                }
            });
        }
        clock.sleep_for(options.duration);
        for (auto& slot : slots) {
            slot->agent->stop();
        }
        for (auto& slot : slots) {
            slot->thread.join();
            slot->agent->disconnect();
        }
    }
    server.stop();

    result.decision_log = decision_log.str();
    result.stats = server.stats();
    result.agent_to_edge_bytes = server.wire_counters().rx_bytes;
    for (auto& slot : slots) {
        result.frames_sent += slot->agent->frames_sent();
        result.unsafe_commands += slot->agent->unsafe_commands();
        result.agent_logs[slot->lane] = slot->log.str();
    }
    return result;
}

} // namespace edgesignal::net
