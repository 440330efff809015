#pragma once

#include "edgesignal/codec.hpp"
#include "edgesignal/controller.hpp"
#include "edgesignal/frame.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace edgesignal::net {

enum class MessageType { Hello, Frame, PhaseCmd, ConfigSync, Heartbeat, Error };

std::string_view to_string(MessageType type);
MessageType message_type_from_string(std::string_view name);

/// One line on the wire. `seq` starts at 0 with Hello and increases by one per
/// message sent on the connection.
struct WireMessage {
    MessageType type = MessageType::Heartbeat;
    int schema = 1;
    std::uint64_t seq = 0;
    Timestamp sent_at{};
    std::optional<LaneId> lane_id;
    Json payload = Json::object();
};

/// Serialized line including the trailing newline.
std::string encode(const WireMessage& message);
/// Throws InputError for anything that is not a well-formed message.
WireMessage decode(std::string_view line);

/// Server's answer to an agent Hello.
struct ServerHello {
    Duration epoch_interval{};
    /// Epoch boundaries fall at origin + k * epoch_interval.
    Timestamp epoch_origin{};
};

Json to_payload(const ServerHello& hello);
ServerHello server_hello_from_payload(const Json& payload);

/// Per-lane part of a phase command.
struct LaneCommand {
    Phase phase = Phase::Red;
    Duration next_sample_interval{};

    friend bool operator==(const LaneCommand&, const LaneCommand&) = default;
};

struct PhaseCommandSet {
    std::uint64_t epoch_seq = 0;
    Timestamp decided_at{};
    LaneId green_lane = 0;
    DecisionReason reason = DecisionReason::CongestionFallback;
    std::map<LaneId, LaneCommand> lanes;

    /// Exactly one lane Green, and it is green_lane.
    bool single_green() const;

    friend bool operator==(const PhaseCommandSet&, const PhaseCommandSet&) = default;
};

PhaseCommandSet phase_commands(std::uint64_t epoch_seq, Timestamp decided_at, const Decision& decision);
Json to_payload(const PhaseCommandSet& commands);
PhaseCommandSet phase_commands_from_payload(const Json& payload);

/// Tracks outgoing sequence numbers for one connection.
class Sequencer {
public:
    std::uint64_t next() { return next_++; }
    void reset() { next_ = 0; }

private:
    std::uint64_t next_ = 0;
};

} // namespace edgesignal::net
