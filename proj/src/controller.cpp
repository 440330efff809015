#include "edgesignal/controller.hpp"
#include "edgesignal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace edgesignal {

namespace {

std::string seconds_field(const char* name, Duration d)
{
    return std::string(name) + " (" + std::to_string(to_seconds(d)) + " s)";
}

const LaneState& lane_or_throw(const IntersectionSnapshot& snapshot, LaneId id)
{
    const auto* lane = snapshot.find(id);
    if (lane == nullptr) {
        throw StructuralError("lane " + std::to_string(id) + " is not in the snapshot");
    }
    return *lane;
}

Duration interval_for(CongestionBand band, const ControllerConfig& config)
{
    return band == CongestionBand::Low ? config.sample_interval_low : config.sample_interval_mid;
}

} // namespace

// ---------------------------------------------------------------------------
// Configuration

std::vector<LaneConfig> ControllerConfig::default_lanes()
{
    return {{1, {}}, {2, {}}, {3, {}}, {4, {}}};
}

std::vector<LaneId> ControllerConfig::lane_ids() const
{
    std::vector<LaneId> ids;
    ids.reserve(lanes.size());
    for (const auto& lane : lanes) {
        ids.push_back(lane.lane_id);
    }
    return ids;
}

const LaneConfig& ControllerConfig::lane(LaneId id) const
{
    for (const auto& lane : lanes) {
        if (lane.lane_id == id) {
            return lane;
        }
    }
    throw ConfigError("lane " + std::to_string(id) + " is not configured");
}

void ControllerConfig::validate() const
{
    thresholds.validate();
    const std::pair<const char*, Duration> durations[] = {
        {"threshold_time_s", threshold_time},
        {"sample_interval_low_s", sample_interval_low},
        {"sample_interval_mid_s", sample_interval_mid},
        {"min_green_s", min_green},
    };
    for (const auto& [name, value] : durations) {
        if (value <= Duration::zero()) {
            throw ConfigError(seconds_field(name, value) + " must be positive");
        }
    }
    if (min_green > threshold_time) {
        throw ConfigError(seconds_field("min_green_s", min_green) +
                          " must not exceed threshold_time_s");
    }
    keywords.validate();
    if (!std::isfinite(min_confidence) || min_confidence < 0.0 || min_confidence > 1.0) {
        throw ConfigError("min_confidence must lie in [0, 1]");
    }
    if (lanes.size() < 2) {
        throw ConfigError("lanes: at least two lanes are required");
    }
    std::set<LaneId> seen;
    for (const auto& lane : lanes) {
        if (!seen.insert(lane.lane_id).second) {
            throw ConfigError("lanes: duplicate lane_id " + std::to_string(lane.lane_id));
        }
        lane.geometry.validate();
    }
}

// ---------------------------------------------------------------------------
// Names

std::string_view to_string(Phase phase)
{
    return phase == Phase::Green ? "Green" : "Red";
}

Phase phase_from_string(std::string_view name)
{
    if (name == "Green") return Phase::Green;
    if (name == "Red") return Phase::Red;
    throw InputError("unknown phase '" + std::string(name) + "'");
}

std::string_view to_string(DecisionReason reason)
{
    switch (reason) {
    case DecisionReason::EmergencyMajority:
        return "EmergencyMajority";
    case DecisionReason::EmergencyTieByIndex:
        return "EmergencyTieByIndex";
    case DecisionReason::CongestionHigh:
        return "CongestionHigh";
    case DecisionReason::CongestionWait:
        return "CongestionWait";
    case DecisionReason::CongestionFallback:
        return "CongestionFallback";
    case DecisionReason::StarvationOverride:
        return "StarvationOverride";
    case DecisionReason::HoldMinGreen:
        return "HoldMinGreen";
    }
    return "?";
}

DecisionReason reason_from_string(std::string_view name)
{
    for (auto reason : {DecisionReason::EmergencyMajority, DecisionReason::EmergencyTieByIndex,
                        DecisionReason::CongestionHigh, DecisionReason::CongestionWait,
                        DecisionReason::CongestionFallback, DecisionReason::StarvationOverride,
                        DecisionReason::HoldMinGreen}) {
        if (to_string(reason) == name) {
            return reason;
        }
    }
    throw InputError("unknown decision reason '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Arbitration

const LaneState* IntersectionSnapshot::find(LaneId id) const
{
    for (const auto& lane : lanes) {
        if (lane.lane_id == id) {
            return &lane;
        }
    }
    return nullptr;
}

bool has_single_green(const Decision& decision)
{
    const auto greens = std::count_if(decision.phases.begin(), decision.phases.end(),
                                      [](const auto& kv) { return kv.second == Phase::Green; });
    const auto it = decision.phases.find(decision.green_lane);
    return greens == 1 && it != decision.phases.end() && it->second == Phase::Green;
}

void validate_snapshot(const IntersectionSnapshot& snapshot)
{
    if (snapshot.lanes.empty()) {
        throw StructuralError("snapshot has no lanes");
    }
    std::set<LaneId> seen;
    for (const auto& lane : snapshot.lanes) {
        if (!seen.insert(lane.lane_id).second) {
            throw StructuralError("duplicate lane_id " + std::to_string(lane.lane_id) +
                                  " in snapshot");
        }
        if (!std::isfinite(lane.index.value) || lane.index.value < 0.0) {
            throw StructuralError("lane " + std::to_string(lane.lane_id) +
                                  " has an invalid congestion index");
        }
        if (lane.red_elapsed < Duration::zero()) {
            throw StructuralError("lane " + std::to_string(lane.lane_id) +
                                  " has negative red_elapsed");
        }
    }
}

EmergencySelection select_by_emergency(const IntersectionSnapshot& snapshot)
{
    std::uint32_t best = 0;
    for (const auto& lane : snapshot.lanes) {
        best = std::max(best, lane.ev.total());
    }
    EmergencySelection selection;
    if (best == 0) {
        return selection;
    }
    for (const auto& lane : snapshot.lanes) {
        if (lane.ev.total() == best) {
            selection.lanes.push_back(lane.lane_id);
        }
    }
    std::sort(selection.lanes.begin(), selection.lanes.end());
    return selection;
}

CongestionPick select_by_congestion(const IntersectionSnapshot& snapshot,
                                    std::span<const LaneId> candidates,
                                    const Thresholds& thresholds)
{
    if (candidates.empty()) {
        throw std::invalid_argument("select_by_congestion needs at least one candidate");
    }
    const LaneState* best = nullptr;
    for (LaneId id : candidates) {
        const LaneState& lane = lane_or_throw(snapshot, id);
        if (best == nullptr) {
            best = &lane;
            continue;
        }
        const auto key = comparison_key(lane.index.value);
        const auto best_key = comparison_key(best->index.value);
        if (key != best_key) {
            if (key > best_key) best = &lane;
        } else if (lane.red_elapsed != best->red_elapsed) {
            if (lane.red_elapsed > best->red_elapsed) best = &lane;
        } else if (lane.lane_id < best->lane_id) {
            best = &lane;
        }
    }
    return {best->lane_id, classify(best->index, thresholds)};
}

std::optional<LaneId> apply_starvation_override(const IntersectionSnapshot& snapshot,
                                                Duration threshold_time)
{
    const LaneState* best = nullptr;
    for (const auto& lane : snapshot.lanes) {
        if (lane.red_elapsed < threshold_time) {
            continue;
        }
        if (best == nullptr || lane.red_elapsed > best->red_elapsed ||
            (lane.red_elapsed == best->red_elapsed && lane.lane_id < best->lane_id)) {
            best = &lane;
        }
    }
    if (best == nullptr) {
        return std::nullopt;
    }
    return best->lane_id;
}

Decision decide(const IntersectionSnapshot& snapshot,
                const ControllerConfig& config,
                LaneId current_green,
                Duration green_elapsed)
{
    validate_snapshot(snapshot);
    const LaneState& current = lane_or_throw(snapshot, current_green);
    if (current.red_elapsed != Duration::zero()) {
        throw StructuralError("current green lane " + std::to_string(current_green) +
                              " reports a non-zero red_elapsed");
    }
    if (green_elapsed < Duration::zero()) {
        throw StructuralError("green_elapsed must not be negative");
    }

    Decision decision;
    for (const auto& lane : snapshot.lanes) {
        const auto band = classify(lane.index, config.thresholds);
        decision.bands[lane.lane_id] = band;
        decision.next_sample_interval[lane.lane_id] = interval_for(band, config);
    }

    auto choose = [&](LaneId lane, DecisionReason reason) {
        decision.green_lane = lane;
        decision.reason = reason;
        for (const auto& state : snapshot.lanes) {
            decision.phases[state.lane_id] = state.lane_id == lane ? Phase::Green : Phase::Red;
        }
        return decision;
    };

    const auto emergency = select_by_emergency(snapshot);
    const bool preempt = config.ev_preempts_min_green && !emergency.none();
    if (green_elapsed < config.min_green && !preempt) {
        return choose(current_green, DecisionReason::HoldMinGreen);
    }

    if (emergency.unique()) {
        return choose(emergency.lanes.front(), DecisionReason::EmergencyMajority);
    }
    if (!emergency.none()) {
        const auto pick = select_by_congestion(snapshot, emergency.lanes, config.thresholds);
        return choose(pick.lane, DecisionReason::EmergencyTieByIndex);
    }

    if (const auto starving = apply_starvation_override(snapshot, config.threshold_time)) {
        return choose(*starving, DecisionReason::StarvationOverride);
    }

    std::vector<LaneId> candidates;
    for (const auto& lane : snapshot.lanes) {
        if (!lane.stale) {
            candidates.push_back(lane.lane_id);
        }
    }
    if (candidates.empty()) {
        for (const auto& lane : snapshot.lanes) {
            candidates.push_back(lane.lane_id);
        }
    }

    std::vector<LaneId> high;
    for (LaneId id : candidates) {
        if (decision.bands.at(id) == CongestionBand::High) {
            high.push_back(id);
        }
    }
    if (!high.empty()) {
        const auto pick = select_by_congestion(snapshot, high, config.thresholds);
        return choose(pick.lane, DecisionReason::CongestionHigh);
    }

    // A Mid-band green keeps its phase and is resampled; a Low-band green
    // turns red and the best remaining lane takes over.
    const bool current_candidate =
        std::find(candidates.begin(), candidates.end(), current_green) != candidates.end();
    if (current_candidate && decision.bands.at(current_green) == CongestionBand::Mid) {
        return choose(current_green, DecisionReason::CongestionWait);
    }
    const auto pick = select_by_congestion(snapshot, candidates, config.thresholds);
    return choose(pick.lane, DecisionReason::CongestionFallback);
}

// ---------------------------------------------------------------------------
// Signal state machine

SignalStateMachine::SignalStateMachine(std::vector<LaneId> lanes, LaneId initial_green,
                                       Timestamp start)
    : current_green_(initial_green), green_since_(start), last_clock_(start)
{
    for (LaneId lane : lanes) {
        red_origin_[lane] = start;
    }
    if (!red_origin_.contains(initial_green)) {
        throw ConfigError("initial green lane " + std::to_string(initial_green) +
                          " is not configured");
    }
}

Timestamp SignalStateMachine::red_origin(LaneId lane) const
{
    const auto it = red_origin_.find(lane);
    if (it == red_origin_.end()) {
        throw StructuralError("unknown lane " + std::to_string(lane));
    }
    return it->second;
}

Duration SignalStateMachine::red_elapsed(LaneId lane, Timestamp now) const
{
    if (lane == current_green_) {
        return Duration::zero();
    }
    return std::max(Duration::zero(), now - red_origin(lane));
}

Duration SignalStateMachine::green_elapsed(Timestamp now) const
{
    return std::max(Duration::zero(), now - green_since_);
}

std::vector<PhaseCommand> SignalStateMachine::step(const Decision& next, Timestamp clock)
{
    if (clock < last_clock_) {
        throw ClockRegression("state machine clock moved backwards from " +
                              std::to_string(to_seconds(last_clock_)) + " s to " +
                              std::to_string(to_seconds(clock)) + " s");
    }
    if (!has_single_green(next) || !red_origin_.contains(next.green_lane)) {
        throw StructuralError("decision does not name exactly one known green lane");
    }
    last_clock_ = clock;
    if (next.green_lane == current_green_) {
        return {};
    }
    const LaneId outgoing = current_green_;
    red_origin_[outgoing] = clock;
    current_green_ = next.green_lane;
    green_since_ = clock;
    return {{outgoing, Phase::Red}, {current_green_, Phase::Green}};
}

// ---------------------------------------------------------------------------
// Engine

DecisionEngine::DecisionEngine(ControllerConfig config, Timestamp start)
    : config_((config.validate(), std::move(config))),
      signals_(config_.lane_ids(), config_.lanes.front().lane_id, start)
{
}

void DecisionEngine::set_config(ControllerConfig config)
{
    config.validate();
    if (config.lane_ids() != config_.lane_ids()) {
        throw ConfigError("lane set cannot change on a running engine");
    }
    config_ = std::move(config);
}

EpochResult DecisionEngine::run_epoch(Timestamp now, std::span<const LaneObservation> observations)
{
    EpochResult result;
    result.snapshot.epoch = now;
    for (const auto& lane : config_.lanes) {
        const auto it = std::find_if(observations.begin(), observations.end(),
                                     [&](const auto& o) { return o.lane_id == lane.lane_id; });
        if (it == observations.end()) {
            throw StructuralError("no observation for lane " + std::to_string(lane.lane_id));
        }
        LaneState state;
        state.lane_id = lane.lane_id;
        state.index = it->index;
        state.ev = it->ev;
        state.red_elapsed = signals_.red_elapsed(lane.lane_id, now);
        state.last_frame_at = it->last_frame_at;
        state.stale = it->stale;
        result.snapshot.lanes.push_back(state);
    }
    if (now < signals_.last_clock()) {
        throw ClockRegression("epoch timestamp precedes the previous epoch");
    }
    result.current_green = signals_.current_green();
    result.green_elapsed = signals_.green_elapsed(now);
    result.decision = decide(result.snapshot, config_, result.current_green, result.green_elapsed);
    result.commands = signals_.step(result.decision, now);
    last_decision_ = result.decision;
    return result;
}

} // namespace edgesignal
