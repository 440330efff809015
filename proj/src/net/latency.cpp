#include "edgesignal/net/latency.hpp"

#include "edgesignal/decision_log.hpp"
#include "edgesignal/errors.hpp"

#include <algorithm>
#include <map>

namespace edgesignal::net {

namespace {

double percentile(const std::vector<double>& sorted, double p)
{
    const double rank = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(rank);
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - static_cast<double>(lo));
}

double ms_between(Timestamp from, Timestamp to)
{
    return static_cast<double>((to - from).count()) / 1000.0;
}

Json to_json(const LatencyStats& s)
{
    return {{"count", s.count}, {"p50_ms", s.p50_ms}, {"p95_ms", s.p95_ms}, {"max_ms", s.max_ms}};
}

} // namespace

LatencyStats summarize(std::vector<double> samples_ms)
{
    LatencyStats stats;
    stats.count = samples_ms.size();
    if (samples_ms.empty()) {
        return stats;
    }
    std::sort(samples_ms.begin(), samples_ms.end());
    stats.p50_ms = percentile(samples_ms, 0.50);
    stats.p95_ms = percentile(samples_ms, 0.95);
    stats.max_ms = samples_ms.back();
    return stats;
}

LatencyReport measure_latency(std::string_view decision_log, const std::vector<std::string>& agent_logs)
{
    LatencyReport report;
    const ParsedLog log = parse_decision_log(decision_log);
    if (log.header) {
        report.mode = log.header->mode;
        report.emulated_rtt_s = to_seconds(log.header->emulated_rtt);
    }
    report.epochs = log.epochs.size();

    std::vector<double> ingest_ms;
    std::map<std::uint64_t, Timestamp> decided;
    for (const auto& epoch : log.epochs) {
        decided[epoch.seq] = epoch.decided_at;
        for (const auto& in : epoch.ingest) {
            ingest_ms.push_back(ms_between(in.received_at, epoch.decided_at));
        }
    }
    report.frame_to_decision = summarize(std::move(ingest_ms));
    if (!log.epochs.empty() && log.epochs.back().wire) {
        const auto& wire = *log.epochs.back().wire;
        report.rx_bytes_per_epoch = static_cast<double>(wire.rx_bytes) / static_cast<double>(report.epochs);
        report.tx_bytes_per_epoch = static_cast<double>(wire.tx_bytes) / static_cast<double>(report.epochs);
    }

    std::vector<double> actuation_ms;
    for (const auto& text : agent_logs) {
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
            if (line.empty()) {
                continue;
            }
            try {
                const Json j = Json::parse(line);
                const auto kind = j.at("kind").get<std::string>();
                if (kind != "actuation") {
                    continue;
                }
                const auto seq = j.at("epoch_seq").get<std::uint64_t>();
                const auto applied = timestamp_from_seconds(j.at("applied_at").get<double>());
                const auto it = decided.find(seq);
                if (it == decided.end()) {
                    ++report.unmatched;
                    continue;
                }
                actuation_ms.push_back(ms_between(it->second, applied));
            } catch (const Json::exception& e) {
                throw ParseError(line_no, std::string("agent log: ") + e.what());
            }
        }
    }
    report.decision_to_actuation = summarize(std::move(actuation_ms));
    return report;
}

Json to_json(const LatencyReport& report)
{
    return {{"schema", 1},
            {"mode", report.mode},
            {"emulated_rtt_s", report.emulated_rtt_s},
            {"epochs", report.epochs},
            {"frame_to_decision", to_json(report.frame_to_decision)},
            {"decision_to_actuation", to_json(report.decision_to_actuation)},
            {"rx_bytes_per_epoch", report.rx_bytes_per_epoch},
            {"tx_bytes_per_epoch", report.tx_bytes_per_epoch},
            {"unmatched", report.unmatched}};
}

} // namespace edgesignal::net
