#include "edgesignal/net/wire.hpp"

#include "edgesignal/config.hpp"
#include "edgesignal/errors.hpp"

#include <array>

namespace edgesignal::net {

namespace {

constexpr std::array<std::pair<MessageType, std::string_view>, 6> kTypeNames = {{
    {MessageType::Hello, "Hello"},
    {MessageType::Frame, "Frame"},
    {MessageType::PhaseCmd, "PhaseCmd"},
    {MessageType::ConfigSync, "ConfigSync"},
    {MessageType::Heartbeat, "Heartbeat"},
    {MessageType::Error, "Error"},
}};

} // namespace

std::string_view to_string(MessageType type)
{
    for (const auto& [t, name] : kTypeNames) {
        if (t == type) {
            return name;
        }
    }
    return "?";
}

MessageType message_type_from_string(std::string_view name)
{
    for (const auto& [t, n] : kTypeNames) {
        if (n == name) {
            return t;
        }
    }
    throw InputError("unknown message type '" + std::string(name) + "'");
}

std::string encode(const WireMessage& message)
{
    Json j = {{"type", std::string(to_string(message.type))},
              {"schema", message.schema},
              {"seq", message.seq},
              {"sent_at", to_seconds(message.sent_at)},
              {"payload", message.payload}};
    if (message.lane_id) {
        j["lane_id"] = *message.lane_id;
    }
    return j.dump() + "\n";
}

WireMessage decode(std::string_view line)
{
    Json j;
    try {
        j = Json::parse(line);
    } catch (const Json::parse_error& e) {
        throw InputError(std::string("message is not JSON: ") + e.what());
    }
    Fields f(j, "message");
    WireMessage message;
    message.type = message_type_from_string(f.string("type"));
    message.schema = static_cast<int>(f.unsigned_int("schema"));
    message.seq = f.unsigned_int("seq");
    message.sent_at = Timestamp{f.seconds("sent_at")};
    if (f.has("lane_id")) {
        message.lane_id = static_cast<LaneId>(f.unsigned_int("lane_id"));
    }
    if (f.has("payload")) {
        message.payload = f.at("payload");
        if (!message.payload.is_object()) {
            throw InputError("message.payload: expected an object");
        }
    }
    f.finish();
    return message;
}

Json to_payload(const ServerHello& hello)
{
    return {{"epoch_interval_s", to_seconds(hello.epoch_interval)},
            {"epoch_origin_s", to_seconds(hello.epoch_origin)}};
}

ServerHello server_hello_from_payload(const Json& payload)
{
    Fields f(payload, "Hello.payload");
    ServerHello hello;
    hello.epoch_interval = f.seconds("epoch_interval_s");
    hello.epoch_origin = Timestamp{f.seconds_or("epoch_origin_s", Duration::zero())};
    f.finish();
    if (hello.epoch_interval <= Duration::zero()) {
        throw InputError("Hello.payload.epoch_interval_s: must be positive");
    }
    return hello;
}

bool PhaseCommandSet::single_green() const
{
    std::size_t greens = 0;
    for (const auto& [id, cmd] : lanes) {
        if (cmd.phase == Phase::Green) {
            ++greens;
            if (id != green_lane) {
                return false;
            }
        }
    }
    return greens == 1;
}

PhaseCommandSet phase_commands(std::uint64_t epoch_seq, Timestamp decided_at, const Decision& decision)
{
    PhaseCommandSet set;
    set.epoch_seq = epoch_seq;
    set.decided_at = decided_at;
    set.green_lane = decision.green_lane;
    set.reason = decision.reason;
    for (const auto& [id, phase] : decision.phases) {
        set.lanes[id] = {phase, decision.next_sample_interval.at(id)};
    }
    return set;
}

Json to_payload(const PhaseCommandSet& commands)
{
    Json lanes = Json::array();
    for (const auto& [id, cmd] : commands.lanes) {
        lanes.push_back({{"lane_id", id},
                         {"phase", std::string(to_string(cmd.phase))},
                         {"next_sample_interval_s", to_seconds(cmd.next_sample_interval)}});
    }
    return {{"epoch_seq", commands.epoch_seq},
            {"decided_at", to_seconds(commands.decided_at)},
            {"green_lane", commands.green_lane},
            {"reason", std::string(to_string(commands.reason))},
            {"lanes", std::move(lanes)}};
}

PhaseCommandSet phase_commands_from_payload(const Json& payload)
{
    Fields f(payload, "PhaseCmd.payload");
    PhaseCommandSet set;
    set.epoch_seq = f.unsigned_int("epoch_seq");
    set.decided_at = Timestamp{f.seconds("decided_at")};
    set.green_lane = static_cast<LaneId>(f.unsigned_int("green_lane"));
    set.reason = reason_from_string(f.string("reason"));
    const Json& lanes = f.at("lanes");
    if (!lanes.is_array()) {
        throw InputError("PhaseCmd.payload.lanes: expected an array");
    }
    for (const auto& item : lanes) {
        Fields lf(item, "PhaseCmd.payload.lanes[]");
        const auto id = static_cast<LaneId>(lf.unsigned_int("lane_id"));
        set.lanes[id] = {phase_from_string(lf.string("phase")), lf.seconds("next_sample_interval_s")};
        lf.finish();
    }
    f.finish();
    return set;
}

} // namespace edgesignal::net
