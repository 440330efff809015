#pragma once

#include "edgesignal/config.hpp"
#include "edgesignal/net/server.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace edgesignal::net {

/// One server and one simulated-camera agent per configured lane, all in this
/// process over loopback TCP.
struct LoopbackOptions {
    SystemConfig config;
    Duration duration = std::chrono::minutes(10);
    std::uint64_t seed = 1;
    /// Mean arrivals per second per lane; lanes not listed use 0.2.
    std::map<LaneId, double> arrival_rates;
    double ev_rate = 0.0;
    WeatherKind weather = WeatherKind::ClearSunny;
    std::string cloud_endpoint;
    std::filesystem::path config_path;
    Duration emulated_rtt{0};
    /// Lockstep runs on logical time: every agent due at an epoch sends its
    /// frame, the server decides once all frames are in, and every agent
    /// applies the result before time moves on. The log is then a pure
    /// function of the options. Otherwise everything runs on the wall clock.
    bool lockstep = true;
    /// Lockstep only: after epoch N, lane L's agent disconnects for good.
    std::vector<std::pair<std::uint64_t, LaneId>> disconnect_after;
    /// Live only: how far ahead of an epoch boundary agents send.
    Duration lead = std::chrono::milliseconds(10);
};

struct LoopbackResult {
    std::string decision_log;
    std::map<LaneId, std::string> agent_logs;
    std::uint64_t frames_sent = 0;
    /// Every byte agents sent to the server, handshakes included.
    std::uint64_t agent_to_edge_bytes = 0;
    ServerStats stats;
    /// PhaseCmd sets received by agents that did not have exactly one green.
    std::uint64_t unsafe_commands = 0;

    std::vector<std::string> agent_log_list() const;
};

/// Throws NetError when a lockstep step times out.
LoopbackResult run_loopback(const LoopbackOptions& options);

} // namespace edgesignal::net
