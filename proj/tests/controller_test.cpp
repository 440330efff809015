#include "edgesignal/codec.hpp"
#include "edgesignal/controller.hpp"
#include "edgesignal/errors.hpp"
#include "support/generators.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace edgesignal;
using namespace std::chrono_literals;

namespace {

IntersectionSnapshot make_snapshot(std::vector<double> indices,
                                   std::vector<std::uint32_t> ev_totals = {},
                                   std::vector<int> red_elapsed_s = {})
{
    IntersectionSnapshot s;
    s.epoch = Timestamp{1000s};
    for (std::size_t i = 0; i < indices.size(); ++i) {
        LaneState lane;
        lane.lane_id = static_cast<LaneId>(i + 1);
        lane.index.value = indices[i];
        if (!ev_totals.empty()) lane.ev.ambulance_count = ev_totals[i];
        if (!red_elapsed_s.empty()) lane.red_elapsed = std::chrono::seconds(red_elapsed_s[i]);
        lane.last_frame_at = s.epoch;
        s.lanes.push_back(lane);
    }
    return s;
}

/// Independent statement of the congestion ordering: a lane wins when no other
/// candidate beats it on (index, red wait, -lane id) lexicographically.
LaneId brute_force_congestion(const IntersectionSnapshot& s, std::span<const LaneId> candidates)
{
    auto beats = [](const LaneState& a, const LaneState& b) {
        const auto ka = comparison_key(a.index.value);
        const auto kb = comparison_key(b.index.value);
        if (ka != kb) return ka > kb;
        if (a.red_elapsed != b.red_elapsed) return a.red_elapsed > b.red_elapsed;
        return a.lane_id < b.lane_id;
    };
    std::vector<LaneId> winners;
    for (LaneId a : candidates) {
        const bool beaten = std::any_of(candidates.begin(), candidates.end(), [&](LaneId b) {
            return b != a && beats(*s.find(b), *s.find(a));
        });
        if (!beaten) winners.push_back(a);
    }
    EXPECT_EQ(winners.size(), 1u);
    return winners.front();
}

const ControllerConfig kConfig{};

// ---------------------------------------------------------------------------

TEST(SelectByEmergency, UniqueMaximum)
{
    const auto sel = select_by_emergency(make_snapshot({0, 0, 0, 0}, {1, 0, 3, 0}));
    ASSERT_TRUE(sel.unique());
    EXPECT_EQ(sel.lanes.front(), 3u);
}

TEST(SelectByEmergency, NoneWhenAllZero)
{
    EXPECT_TRUE(select_by_emergency(make_snapshot({0, 0, 0, 0}, {0, 0, 0, 0})).none());
}

TEST(SelectByEmergency, TieSet)
{
    const auto sel = select_by_emergency(make_snapshot({0, 0, 0, 0}, {2, 2, 0, 0}));
    EXPECT_EQ(sel.lanes, (std::vector<LaneId>{1, 2}));
}

TEST(SelectByCongestion, HighestIndexWins)
{
    const auto s = make_snapshot({0.26, 0.04, 0.07, 0.02});
    const std::vector<LaneId> all{1, 2, 3, 4};
    const auto pick = select_by_congestion(s, all, kConfig.thresholds);
    EXPECT_EQ(pick.lane, 1u);
    EXPECT_EQ(pick.band, CongestionBand::High);
}

TEST(SelectByCongestion, EqualIndicesGoToLongestRed)
{
    const auto s = make_snapshot({0.2, 0.2, 0.2, 0.2}, {}, {10, 50, 10, 10});
    const std::vector<LaneId> all{1, 2, 3, 4};
    EXPECT_EQ(brute_force_congestion(s, all), 2u);
    EXPECT_EQ(select_by_congestion(s, all, kConfig.thresholds).lane, 2u);
}

TEST(SelectByCongestion, Singleton)
{
    const auto s = make_snapshot({0.3, 0.2, 0.1, 0.0});
    const std::vector<LaneId> only{4};
    EXPECT_EQ(select_by_congestion(s, only, kConfig.thresholds).lane, 4u);
}

TEST(SelectByCongestion, MatchesBruteForceOrdering)
{
    testkit::Gen g(31);
    for (int i = 0; i < 3000; ++i) {
        // Coarse values so ties on index and red wait are common.
        std::vector<double> idx;
        std::vector<int> red;
        for (int l = 0; l < 5; ++l) {
            idx.push_back(0.05 * static_cast<double>(g.uniform(0, 4)));
            red.push_back(static_cast<int>(10 * g.uniform(0, 3)));
        }
        const auto s = make_snapshot(idx, {}, red);
        std::vector<LaneId> candidates;
        for (LaneId id = 1; id <= 5; ++id) {
            if (g.coin(0.7)) candidates.push_back(id);
        }
        if (candidates.empty()) candidates.push_back(static_cast<LaneId>(g.uniform(1, 5)));
        EXPECT_EQ(select_by_congestion(s, candidates, kConfig.thresholds).lane,
                  brute_force_congestion(s, candidates));
    }
}

TEST(SelectByCongestion, RejectsEmptyCandidates)
{
    EXPECT_THROW(select_by_congestion(make_snapshot({0.1, 0.2}), {}, kConfig.thresholds),
                 std::invalid_argument);
}

TEST(StarvationOverride, ExpiredLaneSelected)
{
    EXPECT_EQ(apply_starvation_override(make_snapshot({0, 0, 0, 0}, {}, {0, 130, 20, 0}), 120s), 2u);
}

TEST(StarvationOverride, NothingExpired)
{
    EXPECT_FALSE(apply_starvation_override(make_snapshot({0, 0, 0, 0}, {}, {0, 119, 20, 0}), 120s));
}

TEST(StarvationOverride, TieGoesToLowestLane)
{
    EXPECT_EQ(apply_starvation_override(make_snapshot({0, 0, 0, 0}, {}, {125, 125, 0, 0}), 120s), 1u);
}

TEST(StarvationOverride, ExpiryIsInclusive)
{
    EXPECT_EQ(apply_starvation_override(make_snapshot({0, 0, 0, 0}, {}, {0, 0, 120, 0}), 120s), 3u);
}

// ---------------------------------------------------------------------------

TEST(Decide, EmergencyMajority)
{
    const auto s = make_snapshot({0.3, 0.0, 0.01, 0.2}, {1, 0, 3, 0}, {0, 5, 5, 5});
    const auto d = decide(s, kConfig, 1, 30s);
    EXPECT_EQ(d.green_lane, 3u);
    EXPECT_EQ(d.reason, DecisionReason::EmergencyMajority);
    EXPECT_TRUE(has_single_green(d));
}

TEST(Decide, CongestionHigh)
{
    const auto s = make_snapshot({0.26, 0.04, 0.07, 0.02}, {}, {5, 0, 5, 5});
    const auto d = decide(s, kConfig, 2, 30s);
    EXPECT_EQ(d.green_lane, 1u);
    EXPECT_EQ(d.reason, DecisionReason::CongestionHigh);
}

TEST(Decide, AllZeroFallsBackToLongestRed)
{
    const auto s = make_snapshot({0, 0, 0, 0}, {}, {0, 15, 40, 25});
    const auto d = decide(s, kConfig, 1, 30s);
    EXPECT_EQ(d.green_lane, 3u);
    EXPECT_EQ(d.reason, DecisionReason::CongestionFallback);
}

TEST(Decide, EmergencyTieResolvedByIndex)
{
    const auto s = make_snapshot({0.11, 0.19, 0, 0}, {2, 2, 0, 0}, {0, 5, 5, 5});
    const auto d = decide(s, kConfig, 1, 30s);
    EXPECT_EQ(d.green_lane, 2u);
    EXPECT_EQ(d.reason, DecisionReason::EmergencyTieByIndex);
}

TEST(Decide, MinGreenHoldsEvenAgainstEmergency)
{
    const auto s = make_snapshot({0.0, 0.0, 0.3, 0.0}, {0, 0, 1, 0}, {0, 5, 5, 5});
    const auto held = decide(s, kConfig, 1, 9s);
    EXPECT_EQ(held.green_lane, 1u);
    EXPECT_EQ(held.reason, DecisionReason::HoldMinGreen);

    auto preempting = kConfig;
    preempting.ev_preempts_min_green = true;
    const auto d = decide(s, preempting, 1, 9s);
    EXPECT_EQ(d.green_lane, 3u);
    EXPECT_EQ(d.reason, DecisionReason::EmergencyMajority);

    // Preemption is only for emergencies; congestion still waits.
    const auto plain = make_snapshot({0.0, 0.0, 0.3, 0.0}, {}, {0, 5, 5, 5});
    EXPECT_EQ(decide(plain, preempting, 1, 9s).reason, DecisionReason::HoldMinGreen);
}

TEST(Decide, EmergencyOutranksStarvation)
{
    const auto s = make_snapshot({0.0, 0.0, 0.0, 0.0}, {0, 1, 0, 0}, {0, 5, 500, 5});
    EXPECT_EQ(decide(s, kConfig, 1, 30s).green_lane, 2u);
}

TEST(Decide, StarvationOutranksCongestion)
{
    const auto s = make_snapshot({0.9, 0.0, 0.0, 0.01}, {}, {0, 5, 5, 121});
    const auto d = decide(s, kConfig, 1, 30s);
    EXPECT_EQ(d.green_lane, 4u);
    EXPECT_EQ(d.reason, DecisionReason::StarvationOverride);
}

TEST(Decide, MidBandGreenIsHeld)
{
    // Current green sits in the wait band; a higher Mid lane does not take over.
    const auto s = make_snapshot({0.12, 0.20, 0.05, 0.0}, {}, {0, 30, 30, 30});
    const auto d = decide(s, kConfig, 1, 30s);
    EXPECT_EQ(d.green_lane, 1u);
    EXPECT_EQ(d.reason, DecisionReason::CongestionWait);
}

TEST(Decide, LowBandGreenYieldsToBestLane)
{
    const auto s = make_snapshot({0.02, 0.20, 0.05, 0.0}, {}, {0, 30, 30, 30});
    const auto d = decide(s, kConfig, 1, 30s);
    EXPECT_EQ(d.green_lane, 2u);
    EXPECT_EQ(d.reason, DecisionReason::CongestionFallback);
}

TEST(Decide, StaleLanesCannotWinOnCongestion)
{
    auto s = make_snapshot({0.05, 0.40, 0.30, 0.0}, {}, {0, 30, 30, 30});
    s.lanes[1].stale = true;
    const auto d = decide(s, kConfig, 1, 30s);
    EXPECT_EQ(d.green_lane, 3u);

    // ...but an emergency vehicle still counts.
    s.lanes[1].ev.fire_count = 1;
    EXPECT_EQ(decide(s, kConfig, 1, 30s).green_lane, 2u);

    // With every lane stale the exemption is lifted.
    for (auto& lane : s.lanes) {
        lane.stale = true;
        lane.ev = {};
    }
    EXPECT_EQ(decide(s, kConfig, 1, 30s).green_lane, 2u);
}

TEST(Decide, CadencePerBand)
{
    const auto s = make_snapshot({0.04, 0.12, 0.26, 0.10}, {}, {0, 5, 5, 5});
    const auto d = decide(s, kConfig, 1, 30s);
    EXPECT_EQ(d.next_sample_interval.at(1), 7s);
    EXPECT_EQ(d.next_sample_interval.at(2), 3s);
    EXPECT_EQ(d.next_sample_interval.at(3), 3s);
    EXPECT_EQ(d.next_sample_interval.at(4), 7s);
    EXPECT_EQ(d.bands.at(4), CongestionBand::Low);
}

TEST(Decide, RejectsMalformedSnapshots)
{
    EXPECT_THROW(decide(IntersectionSnapshot{}, kConfig, 1, 30s), StructuralError);
    auto dup = make_snapshot({0.1, 0.2});
    dup.lanes[1].lane_id = 1;
    EXPECT_THROW(decide(dup, kConfig, 1, 30s), StructuralError);
    EXPECT_THROW(decide(make_snapshot({0.1, 0.2}), kConfig, 9, 30s), StructuralError);
    EXPECT_THROW(decide(make_snapshot({0.1, 0.2}, {}, {3, 0}), kConfig, 1, 30s), StructuralError);
    EXPECT_THROW(decide(make_snapshot({-0.1, 0.2}), kConfig, 1, 30s), StructuralError);
}

TEST(DecideProperties, SafetyEvSupremacyCadence)
{
    testkit::Gen g(32);
    for (int i = 0; i < 20000; ++i) {
        const auto e = testkit::random_epoch(g, kConfig);
        const auto d = decide(e.snapshot, kConfig, e.current_green, e.green_elapsed);
        ASSERT_TRUE(has_single_green(d));
        const auto ev = select_by_emergency(e.snapshot);
        if (ev.unique() && e.green_elapsed >= kConfig.min_green) {
            EXPECT_EQ(d.green_lane, ev.lanes.front());
        }
        for (const auto& lane : e.snapshot.lanes) {
            const auto band = classify(lane.index, kConfig.thresholds);
            EXPECT_EQ(d.next_sample_interval.at(lane.lane_id),
                      band == CongestionBand::Low ? kConfig.sample_interval_low
                                                  : kConfig.sample_interval_mid);
        }
    }
}

TEST(DecideProperties, DeterministicSerialization)
{
    testkit::Gen g(33);
    for (int i = 0; i < 2000; ++i) {
        const auto e = testkit::random_epoch(g, kConfig);
        const auto a = to_json(decide(e.snapshot, kConfig, e.current_green, e.green_elapsed)).dump();
        const auto b = to_json(decide(e.snapshot, kConfig, e.current_green, e.green_elapsed)).dump();
        EXPECT_EQ(a, b);
    }
}

TEST(DecideProperties, ArgmaxInvariantUnderCommonScaling)
{
    testkit::Gen g(34);
    for (int i = 0; i < 3000; ++i) {
        auto e = testkit::random_epoch(g, kConfig);
        auto scaled = e.snapshot;
        const auto k = static_cast<std::uint32_t>(g.uniform(2, 6));
        for (std::size_t l = 0; l < e.snapshot.lanes.size(); ++l) {
            const LaneGeometry geometry{g.real(2.0, 30.0), g.real(5.0, 120.0)};
            const auto count = static_cast<std::uint32_t>(g.uniform(0, 200));
            e.snapshot.lanes[l].index = compute_index(count, geometry);
            scaled.lanes[l].index =
                compute_index(count * k, {geometry.width_m * k, geometry.coverage_length_m});
        }
        EXPECT_EQ(decide(e.snapshot, kConfig, e.current_green, e.green_elapsed).green_lane,
                  decide(scaled, kConfig, e.current_green, e.green_elapsed).green_lane);
    }
}

// ---------------------------------------------------------------------------

Decision green(LaneId lane, std::initializer_list<LaneId> lanes)
{
    Decision d;
    d.green_lane = lane;
    for (LaneId id : lanes) d.phases[id] = id == lane ? Phase::Green : Phase::Red;
    return d;
}

TEST(StateMachine, ChangeEmitsRedThenGreen)
{
    SignalStateMachine sm({1, 2, 3, 4}, 1, Timestamp{0s});
    const auto commands = sm.step(green(3, {1, 2, 3, 4}), Timestamp{100s});
    EXPECT_EQ(commands, (std::vector<PhaseCommand>{{1, Phase::Red}, {3, Phase::Green}}));
    EXPECT_EQ(sm.red_origin(1), Timestamp{100s});
    EXPECT_EQ(sm.current_green(), 3u);
    EXPECT_EQ(sm.green_elapsed(Timestamp{104s}), 4s);
    EXPECT_EQ(sm.red_elapsed(1, Timestamp{130s}), 30s);
    EXPECT_EQ(sm.red_elapsed(3, Timestamp{130s}), 0s);
    EXPECT_EQ(sm.red_elapsed(2, Timestamp{130s}), 130s);
}

TEST(StateMachine, NoChangeNoCommands)
{
    SignalStateMachine sm({1, 2, 3, 4}, 2, Timestamp{0s});
    EXPECT_TRUE(sm.step(green(2, {1, 2, 3, 4}), Timestamp{5s}).empty());
    EXPECT_EQ(sm.green_elapsed(Timestamp{5s}), 5s);
}

TEST(StateMachine, ClockRegressionRejected)
{
    SignalStateMachine sm({1, 2, 3, 4}, 1, Timestamp{0s});
    sm.step(green(2, {1, 2, 3, 4}), Timestamp{50s});
    EXPECT_THROW(sm.step(green(3, {1, 2, 3, 4}), Timestamp{40s}), ClockRegression);
    EXPECT_EQ(sm.current_green(), 2u);
    EXPECT_EQ(sm.last_clock(), Timestamp{50s});
    EXPECT_EQ(sm.red_origin(1), Timestamp{50s});
    EXPECT_EQ(sm.red_origin(3), Timestamp{0s});
}

TEST(StateMachine, RejectsDecisionWithoutSingleGreen)
{
    SignalStateMachine sm({1, 2}, 1, Timestamp{0s});
    auto bad = green(2, {1, 2});
    bad.phases[1] = Phase::Green;
    EXPECT_THROW(sm.step(bad, Timestamp{1s}), StructuralError);
}

TEST(Engine, MalformedEpochKeepsPreviousDecision)
{
    DecisionEngine engine(kConfig, Timestamp{0s});
    std::vector<LaneObservation> obs;
    for (LaneId id = 1; id <= 4; ++id) {
        obs.push_back({id, {id == 3 ? 0.3 : 0.0}, {}, Timestamp{0s}, false});
    }
    const auto first = engine.run_epoch(Timestamp{20s}, obs);
    EXPECT_EQ(first.decision.green_lane, 3u);

    obs.pop_back();
    EXPECT_THROW(engine.run_epoch(Timestamp{40s}, obs), StructuralError);
    ASSERT_TRUE(engine.last_decision());
    EXPECT_EQ(*engine.last_decision(), first.decision);
    EXPECT_EQ(engine.signals().current_green(), 3u);
    EXPECT_EQ(engine.signals().last_clock(), Timestamp{20s});
}

TEST(Config, Validation)
{
    EXPECT_NO_THROW(kConfig.validate());
    auto c = kConfig;
    c.min_green = 200s;
    EXPECT_THROW(c.validate(), ConfigError);
    c = kConfig;
    c.lanes.resize(1);
    EXPECT_THROW(c.validate(), ConfigError);
    c = kConfig;
    c.lanes[2].lane_id = 1;
    EXPECT_THROW(c.validate(), ConfigError);
    c = kConfig;
    c.sample_interval_mid = 0s;
    EXPECT_THROW(c.validate(), ConfigError);
}

} // namespace
