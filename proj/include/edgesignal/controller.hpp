#pragma once

#include "edgesignal/congestion.hpp"
#include "edgesignal/emergency.hpp"
#include "edgesignal/time.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace edgesignal {

using LaneId = std::uint32_t;

struct LaneConfig {
    LaneId lane_id = 0;
    LaneGeometry geometry;

    friend bool operator==(const LaneConfig&, const LaneConfig&) = default;
};

struct ControllerConfig {
    Thresholds thresholds;
    /// Longest a lane may wait on red before it is granted green outright.
    Duration threshold_time = std::chrono::seconds(120);
    Duration sample_interval_low = std::chrono::seconds(7);
    Duration sample_interval_mid = std::chrono::seconds(3);
    Duration min_green = std::chrono::seconds(10);
    bool ev_preempts_min_green = false;
    EvKeywordSet keywords;
    double min_confidence = 0.5;
    std::vector<LaneConfig> lanes = default_lanes();

    /// Throws ConfigError naming the offending field.
    void validate() const;
    std::size_t lane_count() const { return lanes.size(); }
    std::vector<LaneId> lane_ids() const;
    const LaneConfig& lane(LaneId id) const;

    static std::vector<LaneConfig> default_lanes();

    friend bool operator==(const ControllerConfig&, const ControllerConfig&) = default;
};

struct LaneState {
    LaneId lane_id = 0;
    CongestionIndex index;
    EvDetection ev;
    /// Time since this lane last went from green to red; zero while green.
    Duration red_elapsed{0};
    Timestamp last_frame_at{};
    /// Latest frame is too old to trust. Stale lanes only win green through an
    /// emergency vehicle or an expired threshold time.
    bool stale = false;

    friend bool operator==(const LaneState&, const LaneState&) = default;
};

struct IntersectionSnapshot {
    Timestamp epoch{};
    std::vector<LaneState> lanes;

    const LaneState* find(LaneId id) const;

    friend bool operator==(const IntersectionSnapshot&, const IntersectionSnapshot&) = default;
};

enum class Phase { Green, Red };

enum class DecisionReason {
    EmergencyMajority,
    EmergencyTieByIndex,
    CongestionHigh,
    CongestionWait,
    CongestionFallback,
    StarvationOverride,
    HoldMinGreen,
};

std::string_view to_string(Phase phase);
Phase phase_from_string(std::string_view name);
std::string_view to_string(DecisionReason reason);
DecisionReason reason_from_string(std::string_view name);

struct Decision {
    LaneId green_lane = 0;
    std::map<LaneId, Phase> phases;
    std::map<LaneId, Duration> next_sample_interval;
    std::map<LaneId, CongestionBand> bands;
    DecisionReason reason = DecisionReason::CongestionFallback;

    friend bool operator==(const Decision&, const Decision&) = default;
};

/// True when exactly one lane is Green and it is `green_lane`.
bool has_single_green(const Decision& decision);

/// Throws StructuralError for an empty snapshot, duplicate lane ids or
/// out-of-range lane values.
void validate_snapshot(const IntersectionSnapshot& snapshot);

/// Lanes carrying the largest non-zero emergency-vehicle total, ascending by id.
/// Empty when no lane has one; more than one entry is a tie to be settled by
/// congestion.
struct EmergencySelection {
    std::vector<LaneId> lanes;

    bool none() const { return lanes.empty(); }
    bool unique() const { return lanes.size() == 1; }
};

EmergencySelection select_by_emergency(const IntersectionSnapshot& snapshot);

struct CongestionPick {
    LaneId lane = 0;
    CongestionBand band = CongestionBand::Low;
};

/// Highest index among `candidates`; equal indices go to the longest red wait,
/// then to the lowest lane id. `candidates` must be a non-empty subset of the
/// snapshot's lanes.
CongestionPick select_by_congestion(const IntersectionSnapshot& snapshot,
                                    std::span<const LaneId> candidates,
                                    const Thresholds& thresholds);

/// Lane with the longest red wait at or beyond `threshold_time`, lowest id on
/// ties; nullopt when nothing has expired.
std::optional<LaneId> apply_starvation_override(const IntersectionSnapshot& snapshot,
                                                Duration threshold_time);

/// One arbitration step. Priority, highest first:
///   1. hold the current green until min_green has elapsed,
///   2. emergency vehicles (unique maximum, else highest index among the tie),
///   3. a lane whose red wait reached threshold_time,
///   4. congestion: the highest High-band lane; otherwise a Mid-band current
///      green is held; otherwise the highest index overall.
/// Stale lanes are left out of step 4 unless every lane is stale.
Decision decide(const IntersectionSnapshot& snapshot,
                const ControllerConfig& config,
                LaneId current_green,
                Duration green_elapsed);

struct PhaseCommand {
    LaneId lane_id = 0;
    Phase phase = Phase::Red;

    friend bool operator==(const PhaseCommand&, const PhaseCommand&) = default;
};

/// Red/green signal heads plus the timers decide() reads.
class SignalStateMachine {
public:
    SignalStateMachine(std::vector<LaneId> lanes, LaneId initial_green, Timestamp start);

    LaneId current_green() const { return current_green_; }
    Timestamp last_clock() const { return last_clock_; }
    Timestamp red_origin(LaneId lane) const;
    Duration red_elapsed(LaneId lane, Timestamp now) const;
    Duration green_elapsed(Timestamp now) const;

    /// Applies `next`. Emits {outgoing: Red, incoming: Green} on a change and
    /// nothing otherwise. Throws ClockRegression if `clock` is earlier than the
    /// previous step, leaving every timer untouched.
    std::vector<PhaseCommand> step(const Decision& next, Timestamp clock);

private:
    std::map<LaneId, Timestamp> red_origin_;
    LaneId current_green_;
    Timestamp green_since_;
    Timestamp last_clock_;
};

/// What the perception side knows about a lane at an epoch boundary.
struct LaneObservation {
    LaneId lane_id = 0;
    CongestionIndex index;
    EvDetection ev;
    Timestamp last_frame_at{};
    bool stale = false;
};

struct EpochResult {
    IntersectionSnapshot snapshot;
    LaneId current_green = 0;
    Duration green_elapsed{0};
    Decision decision;
    std::vector<PhaseCommand> commands;
};

/// decide() plus the state machine: turns per-lane observations into a
/// decision and advances the signal timers. Single-threaded by contract.
class DecisionEngine {
public:
    DecisionEngine(ControllerConfig config, Timestamp start);

    /// Observations must cover every configured lane. On a StructuralError the
    /// engine keeps its previous state.
    EpochResult run_epoch(Timestamp now, std::span<const LaneObservation> observations);

    /// Swaps thresholds, timers and keywords. The lane set must not change.
    void set_config(ControllerConfig config);
    const ControllerConfig& config() const { return config_; }
    const SignalStateMachine& signals() const { return signals_; }
    const std::optional<Decision>& last_decision() const { return last_decision_; }

private:
    ControllerConfig config_;
    SignalStateMachine signals_;
    std::optional<Decision> last_decision_;
};

} // namespace edgesignal
