#pragma once

#include "edgesignal/config.hpp"
#include "edgesignal/controller.hpp"

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace edgesignal {

/// First line of every decision log: who wrote it and under which config.
struct LogHeader {
    std::string source = "simulator";
    SystemConfig config;
    /// "edge", or "cloud" when decisions took an emulated round trip.
    std::string mode = "edge";
    Duration emulated_rtt{0};
};

/// A frame that reached the edge server since the previous epoch.
struct IngestRecord {
    LaneId lane_id = 0;
    std::uint64_t seq = 0;
    Timestamp received_at{};
    std::uint64_t bytes = 0;

    friend bool operator==(const IngestRecord&, const IngestRecord&) = default;
};

struct WireCounters {
    std::uint64_t rx_bytes = 0;
    std::uint64_t tx_bytes = 0;

    friend bool operator==(const WireCounters&, const WireCounters&) = default;
};

/// One line per decision epoch. The decide() inputs (snapshot, current green,
/// green elapsed) are sufficient to recompute `decision`.
struct EpochRecord {
    std::uint64_t seq = 0;
    IntersectionSnapshot snapshot;
    LaneId current_green = 0;
    Duration green_elapsed{0};
    Decision decision;
    Timestamp decided_at{};
    std::vector<IngestRecord> ingest;
    std::optional<WireCounters> wire;
    /// Set on the first epoch decided under a newly applied controller config;
    /// replay uses it from this epoch on.
    std::optional<ControllerConfig> config_change;
};

std::string format_header(const LogHeader& header);
std::string format_epoch(const EpochRecord& record);

/// Appends newline-terminated records and flushes after each one.
class DecisionLogWriter {
public:
    explicit DecisionLogWriter(std::ostream& out) : out_(out) {}

    void write_header(const LogHeader& header);
    void write_epoch(const EpochRecord& record);

private:
    std::ostream& out_;
    std::mutex mutex_;
};

struct ParsedLog {
    std::optional<LogHeader> header;
    std::vector<EpochRecord> epochs;
    /// Raw text of each epoch line and its 1-based line number.
    std::vector<std::string> epoch_lines;
    std::vector<std::size_t> epoch_line_numbers;
};

/// Throws ParseError naming the line for malformed JSON, unknown record kinds,
/// schema mismatches or a final line without its terminating newline.
ParsedLog parse_decision_log(std::string_view text);

struct Divergence {
    std::size_t line = 0;
    std::string detail;
    std::string expected;
    std::string actual;
};

struct ReplayVerdict {
    std::size_t epochs = 0;
    std::optional<Divergence> first_divergence;

    bool consistent() const { return !first_divergence.has_value(); }
    /// "consistent (N epochs)" or "divergent at line L: ...".
    std::string summary() const;
};

/// Re-runs decide() on every logged snapshot and compares the re-serialized
/// line with the logged one byte for byte. Also checks that every decision has
/// exactly one green and that each epoch starts from the previous green lane.
/// Decisions use the header's controller config until an epoch carries a
/// config_change.
ReplayVerdict replay(std::string_view log_text);

} // namespace edgesignal
