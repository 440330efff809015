#include "edgesignal/decision_log.hpp"
#include "edgesignal/codec.hpp"
#include "edgesignal/errors.hpp"

#include <ostream>

namespace edgesignal {

namespace {

Json header_json(const LogHeader& header)
{
    return {{"kind", "header"},
            {"schema", kSchemaVersion},
            {"tool_version", std::string(kToolVersion)},
            {"source", header.source},
            {"mode", header.mode},
            {"emulated_rtt_s", to_seconds(header.emulated_rtt)},
            {"config", to_json(header.config)}};
}

Json epoch_json(const EpochRecord& record)
{
    Json j = {{"kind", "epoch"},
              {"schema", kSchemaVersion},
              {"seq", record.seq},
              {"epoch", to_seconds(record.snapshot.epoch)},
              {"current_green", record.current_green},
              {"green_elapsed", to_seconds(record.green_elapsed)},
              {"snapshot", to_json(record.snapshot)},
              {"decision", to_json(record.decision)},
              {"reason", std::string(to_string(record.decision.reason))},
              {"decided_at", to_seconds(record.decided_at)}};
    if (!record.ingest.empty()) {
        Json ingest = Json::array();
        for (const auto& in : record.ingest) {
            ingest.push_back({{"lane_id", in.lane_id},
                              {"seq", in.seq},
                              {"received_at", to_seconds(in.received_at)},
                              {"bytes", in.bytes}});
        }
        j["ingest"] = std::move(ingest);
    }
    if (record.wire) {
        j["wire"] = {{"rx_bytes", record.wire->rx_bytes}, {"tx_bytes", record.wire->tx_bytes}};
    }
    if (record.config_change) {
        j["config_change"] = to_json(*record.config_change);
    }
    return j;
}

LogHeader header_from_json(const Json& j)
{
    Fields f(j, "header");
    f.string("kind");
    f.unsigned_int("schema");
    f.string_or("tool_version", "");
    LogHeader header;
    header.source = f.string("source");
    header.mode = f.string_or("mode", "edge");
    header.emulated_rtt = f.seconds_or("emulated_rtt_s", Duration::zero());
    header.config = system_config_from_json(f.at("config"));
    header.config.validate();
    f.finish();
    return header;
}

EpochRecord epoch_from_json(const Json& j)
{
    Fields f(j, "epoch");
    f.string("kind");
    f.unsigned_int("schema");
    EpochRecord record;
    record.seq = f.unsigned_int("seq");
    const Duration epoch = f.seconds("epoch");
    record.current_green = static_cast<LaneId>(f.unsigned_int("current_green"));
    record.green_elapsed = f.seconds("green_elapsed");
    record.snapshot = snapshot_from_json(f.at("snapshot"), "epoch.snapshot");
    if (record.snapshot.epoch.time_since_epoch() != epoch) {
        throw InputError("epoch: timestamp disagrees with snapshot.epoch");
    }
    record.decision = decision_from_json(f.at("decision"), "epoch.decision");
    if (reason_from_string(f.string("reason")) != record.decision.reason) {
        throw InputError("epoch.reason: disagrees with decision.reason");
    }
    record.decided_at = Timestamp{f.seconds_or("decided_at", epoch)};
    if (f.has("ingest")) {
        const Json& ingest = f.at("ingest");
        if (!ingest.is_array()) {
            throw InputError("epoch.ingest: expected an array");
        }
        for (const auto& item : ingest) {
            Fields in(item, "epoch.ingest[]");
            IngestRecord rec;
            rec.lane_id = static_cast<LaneId>(in.unsigned_int("lane_id"));
            rec.seq = in.unsigned_int("seq");
            rec.received_at = Timestamp{in.seconds("received_at")};
            rec.bytes = in.unsigned_int_or("bytes", 0);
            in.finish();
            record.ingest.push_back(rec);
        }
    }
    if (f.has("wire")) {
        Fields w(f.at("wire"), "epoch.wire");
        record.wire = WireCounters{w.unsigned_int("rx_bytes"), w.unsigned_int("tx_bytes")};
        w.finish();
    }
    if (f.has("config_change")) {
        record.config_change = controller_config_from_json(f.at("config_change"), "epoch.config_change");
        record.config_change->validate();
    }
    f.finish();
    return record;
}

} // namespace

std::string format_header(const LogHeader& header)
{
    return header_json(header).dump();
}

std::string format_epoch(const EpochRecord& record)
{
    return epoch_json(record).dump();
}

void DecisionLogWriter::write_header(const LogHeader& header)
{
    std::lock_guard lock(mutex_);
    out_ << format_header(header) << '\n';
    out_.flush();
}

void DecisionLogWriter::write_epoch(const EpochRecord& record)
{
    std::lock_guard lock(mutex_);
    out_ << format_epoch(record) << '\n';
    out_.flush();
}

ParsedLog parse_decision_log(std::string_view text)
{
    ParsedLog log;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        ++line_no;
        const auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            throw ParseError(line_no, "truncated record (no terminating newline)");
        }
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) {
            throw ParseError(line_no, "empty line");
        }
        try {
            const Json j = Json::parse(line);
            if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
                throw InputError("record has no kind");
            }
            if (!j.contains("schema") || j["schema"] != kSchemaVersion) {
                throw InputError("unsupported or missing schema version");
            }
            const auto kind = j["kind"].get<std::string>();
            if (kind == "header") {
                if (log.header || !log.epochs.empty()) {
                    throw InputError("header must be the first and only header line");
                }
                log.header = header_from_json(j);
            } else if (kind == "epoch") {
                if (!log.header) {
                    throw InputError("epoch record before header");
                }
                log.epochs.push_back(epoch_from_json(j));
                log.epoch_lines.emplace_back(line);
                log.epoch_line_numbers.push_back(line_no);
            } else {
                throw InputError("unknown record kind '" + kind + "'");
            }
        } catch (const Json::exception& e) {
            throw ParseError(line_no, e.what());
        } catch (const ParseError&) {
            throw;
        } catch (const InputError& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return log;
}

std::string ReplayVerdict::summary() const
{
    if (consistent()) {
        return "consistent (" + std::to_string(epochs) + " epochs)";
    }
    return "divergent at line " + std::to_string(first_divergence->line) + ": " +
           first_divergence->detail;
}

ReplayVerdict replay(std::string_view log_text)
{
    const ParsedLog log = parse_decision_log(log_text);
    ReplayVerdict verdict;
    verdict.epochs = log.epochs.size();
    if (!log.header) {
        return verdict;
    }
    ControllerConfig config = log.header->config.controller;

    std::optional<LaneId> expected_green;
    for (std::size_t i = 0; i < log.epochs.size(); ++i) {
        const EpochRecord& logged = log.epochs[i];
        const std::size_t line = log.epoch_line_numbers[i];
        auto diverge = [&](std::string detail, std::string expected, std::string actual) {
            verdict.first_divergence =
                Divergence{line, std::move(detail), std::move(expected), std::move(actual)};
        };

        if (expected_green && logged.current_green != *expected_green) {
            diverge("epoch starts from the wrong green lane", std::to_string(*expected_green),
                    std::to_string(logged.current_green));
            break;
        }
        if (!has_single_green(logged.decision)) {
            diverge("logged decision does not have exactly one green lane", "1 green",
                    to_json(logged.decision).dump());
            break;
        }

        if (logged.config_change) {
            config = *logged.config_change;
        }
        EpochRecord recomputed = logged;
        try {
            recomputed.decision =
                decide(logged.snapshot, config, logged.current_green, logged.green_elapsed);
        } catch (const StructuralError& e) {
            diverge(std::string("snapshot rejected: ") + e.what(), "valid snapshot",
                    to_json(logged.snapshot).dump());
            break;
        }
        const std::string expected_line = format_epoch(recomputed);
        if (expected_line != log.epoch_lines[i]) {
            diverge("decision differs from recomputation", to_json(recomputed.decision).dump(),
                    to_json(logged.decision).dump());
            break;
        }
        expected_green = logged.decision.green_lane;
    }
    return verdict;
}

} // namespace edgesignal
