#pragma once

#include "edgesignal/codec.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace edgesignal::net {

struct LatencyStats {
    std::size_t count = 0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double max_ms = 0.0;
};

/// Percentiles with linear interpolation between closest ranks.
LatencyStats summarize(std::vector<double> samples_ms);

struct LatencyReport {
    std::string mode;
    double emulated_rtt_s = 0.0;
    std::size_t epochs = 0;
    /// Frame received by the server to the decision that consumed it.
    LatencyStats frame_to_decision;
    /// Decision available at the server to the phase command applied at an agent.
    LatencyStats decision_to_actuation;
    double rx_bytes_per_epoch = 0.0;
    double tx_bytes_per_epoch = 0.0;
    /// Actuation records with no matching epoch in the decision log.
    std::uint64_t unmatched = 0;
};

/// Empty inputs give an empty report. Throws ParseError on corrupt lines.
LatencyReport measure_latency(std::string_view decision_log, const std::vector<std::string>& agent_logs);

Json to_json(const LatencyReport& report);

} // namespace edgesignal::net
