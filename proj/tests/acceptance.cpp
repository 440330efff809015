// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Every tolerance and budget is a named constant below.

#include "edgesignal/config.hpp"
#include "edgesignal/congestion.hpp"
#include "edgesignal/controller.hpp"
#include "edgesignal/decision_log.hpp"
#include "edgesignal/emergency.hpp"
#include "edgesignal/frame.hpp"
#include "edgesignal/net/cloud.hpp"
#include "edgesignal/net/latency.hpp"
#include "edgesignal/net/loopback.hpp"
#include "edgesignal/sim/detector.hpp"
#include "edgesignal/sim/rng.hpp"
#include "edgesignal/sim/simulator.hpp"

#include "support/generators.hpp"
#include "support/index_oracle.hpp"
#include "support/scenarios.hpp"
#include "support/temp_dir.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

using namespace edgesignal;
using namespace std::chrono_literals;

namespace {

constexpr double kGoldenBudgetS = 1.0;
constexpr int kSafetySnapshots = 100'000;
constexpr int kStarvationSeeds = 50;
constexpr int kStarvationHorizonS = 3600;
constexpr double kLightLaneMaxIndex = 0.01;
constexpr int kMirrorStrings = 10'000;
constexpr int kReplaySimSeeds = 20;
constexpr int kReplaySimHorizonS = 900;
constexpr auto kReplayLoopbackDuration = 5min;
constexpr auto kBandwidthDuration = 10min;
constexpr auto kBandwidthCadence = 3s;
constexpr auto kBandwidthDenseCadence = 1s;
constexpr double kCloudBytesPerConfigByte = 2.0;
constexpr double kEdgeBytesMinScaling = 1.9;
constexpr auto kLatencyRunDuration = 15s;
constexpr auto kLatencyEpoch = 500ms;
constexpr auto kLatencyRtt = 200ms;
constexpr double kLatencyMinGapMs = 100.0;
constexpr double kEdgeP95BudgetMs = 50.0;
constexpr double kLatencyBudgetS = 120.0;
constexpr double kIndexRelTolerance = 1e-12;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double elapsed_s(std::chrono::steady_clock::time_point since)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

IntersectionSnapshot snapshot_of(const std::vector<DetectionFrame>& frames,
                                 const ControllerConfig& config,
                                 LaneId current_green)
{
    IntersectionSnapshot snapshot;
    for (const auto& frame : frames) {
        const LaneObservation obs = observe(frame, config);
        LaneState state;
        state.lane_id = frame.lane_id;
        state.index = obs.index;
        state.ev = obs.ev;
        state.last_frame_at = frame.captured_at;
        state.red_elapsed = frame.lane_id == current_green ? Duration::zero() : 30s;
        snapshot.lanes.push_back(state);
    }
    return snapshot;
}

// 1. Each weather row: a queue observed through its weather profile (dropout
// off) must read as the row's index, and that index must produce the row's
// outcome for the lane both when it holds green and when a Mid lane does.
Outcome weather_golden()
{
    const auto start = std::chrono::steady_clock::now();
    enum class Expect { Green, Wait, Red };
    struct Row {
        WeatherKind weather;
        std::uint32_t queued;
        double index;
        Expect expect;
    };
    const std::vector<Row> rows = {
        {WeatherKind::ClearSunny, 26, 0.26, Expect::Green},   {WeatherKind::Rainy, 40, 0.30, Expect::Green},
        {WeatherKind::HeavySnowfall, 24, 0.12, Expect::Wait}, {WeatherKind::Foggy, 26, 0.04, Expect::Red},
        {WeatherKind::RainyNight, 26, 0.13, Expect::Wait},    {WeatherKind::Night, 25, 0.20, Expect::Wait},
    };
    const ControllerConfig config;
    std::string failures;
    for (const auto& row : rows) {
        WeatherProfile profile = default_profile(row.weather);
        profile.dropout_prob = 0.0;
        sim::RngStream rng(1);
        const DetectionFrame lane1 = sim::detector_model({1, row.queued, 0, 0, {}}, profile, rng, {});
        const double index = compute_index(lane1.vehicle_count, config.lane(1).geometry).value;
        if (index != row.index) {
            failures += fmt::format(" {}:index {}!={}", to_string(row.weather), index, row.index);
            continue;
        }
        const std::vector<DetectionFrame> frames = {
            lane1, {2, 11, {}, {}}, {3, 2, {}, {}}, {4, 0, {}, {}}};
        for (const LaneId current : {LaneId{1}, LaneId{2}}) {
            const Decision d = decide(snapshot_of(frames, config, current), config, current, config.min_green);
            const Phase phase = d.phases.at(1);
            const Duration resample = d.next_sample_interval.at(1);
            bool ok = has_single_green(d);
            switch (row.expect) {
            case Expect::Green:
                ok = ok && phase == Phase::Green && d.reason == DecisionReason::CongestionHigh;
                break;
            case Expect::Wait:
                ok = ok && d.green_lane == current && (phase == Phase::Green) == (current == 1) &&
                     resample == config.sample_interval_mid;
                break;
            case Expect::Red:
                ok = ok && phase == Phase::Red && resample == config.sample_interval_low;
                break;
            }
            if (!ok) {
                failures += fmt::format(" {}(green={}):{}", to_string(row.weather), current,
                                        to_string(d.reason));
            }
        }
    }
    const double took = elapsed_s(start);
    return {failures.empty() && took < kGoldenBudgetS,
            failures.empty() ? fmt::format("6 rows x 2 contexts match in {:.3f} s", took)
                             : "mismatch:" + failures};
}

DetectionFrame ev_frame(LaneId lane, std::uint32_t vehicles, const std::vector<std::string>& texts)
{
    DetectionFrame frame{lane, vehicles, {}, {}};
    for (const auto& text : texts) {
        frame.readings.push_back({text, Orientation::AsCaptured, 0.9});
    }
    return frame;
}

// 2. Emergency examples, fed through OCR readings.
Outcome emergency_examples()
{
    const auto start = std::chrono::steady_clock::now();
    const ControllerConfig config;
    const std::vector<DetectionFrame> majority = {
        ev_frame(1, 5, {"ECNALUBMA"}),
        ev_frame(2, 12, {}),
        ev_frame(3, 3, {"ECNALUBMA", "FIRE BRIGADE", "ECNALUBMA"}),
        ev_frame(4, 20, {}),
    };
    const IntersectionSnapshot majority_snapshot = snapshot_of(majority, config, 2);
    const Decision a = decide(majority_snapshot, config, 2, config.min_green);

    const std::vector<DetectionFrame> tie = {
        ev_frame(1, 8, {"ECNALUBMA", "FIRE"}),
        ev_frame(2, 17, {"ECNALUBMA", "ECNALUBMA"}),
        ev_frame(3, 30, {}),
        ev_frame(4, 0, {}),
    };
    const IntersectionSnapshot tie_snapshot = snapshot_of(tie, config, 1);
    const Decision b = decide(tie_snapshot, config, 1, config.min_green);

    const double took = elapsed_s(start);
    auto totals = [](const IntersectionSnapshot& snapshot) {
        std::vector<std::uint32_t> nv;
        for (const auto& lane : snapshot.lanes) {
            nv.push_back(lane.ev.total());
        }
        return nv;
    };
    const bool counts = totals(majority_snapshot) == std::vector<std::uint32_t>{1, 0, 3, 0} &&
                        totals(tie_snapshot) == std::vector<std::uint32_t>{2, 2, 0, 0};
    const bool ok = counts && a.green_lane == 3 && a.reason == DecisionReason::EmergencyMajority && b.green_lane == 2 &&
                    b.reason == DecisionReason::EmergencyTieByIndex && took < kGoldenBudgetS;
    return {ok, fmt::format("NV=[1,0,3,0] -> lane {} ({}); tie NV=[2,2,0,0] -> lane {} ({}); {:.3f} s",
                            a.green_lane, to_string(a.reason), b.green_lane, to_string(b.reason), took)};
}

// 3. Exactly one green over random snapshots and configs.
Outcome safety()
{
    testkit::Gen gen(0xACCE97);
    std::size_t violations = 0;
    for (int i = 0; i < kSafetySnapshots; ++i) {
        ControllerConfig config;
        config.min_green = Duration{static_cast<std::int64_t>(gen.uniform(0, 60'000'000))};
        config.threshold_time = config.min_green + Duration{static_cast<std::int64_t>(gen.uniform(0, 240'000'000))};
        config.lanes.resize(gen.uniform(1, 8));
        for (std::size_t l = 0; l < config.lanes.size(); ++l) {
            config.lanes[l].lane_id = static_cast<LaneId>(l + 1);
        }
        const auto e = testkit::random_epoch(gen, config);
        if (!has_single_green(decide(e.snapshot, config, e.current_green, e.green_elapsed))) {
            ++violations;
        }
    }
    return {violations == 0, fmt::format("{} snapshots, {} violations", kSafetySnapshots, violations)};
}

// 4. Light-lane starvation, checked from the decision log rather than the
// simulator's own counter.
Outcome starvation()
{
    const SystemConfig config;
    const ControllerConfig& c = config.controller;
    const Duration bound = c.threshold_time + config.epoch_interval + c.min_green;
    std::size_t violations = 0;
    std::size_t simulator_violations = 0;
    double worst_s = 0.0;
    double max_index = 0.0;
    for (int seed = 1; seed <= kStarvationSeeds; ++seed) {
        const auto result =
            sim::run_scenario(testkit::one_light_lane(static_cast<std::uint64_t>(seed), kStarvationHorizonS),
                              config, static_cast<std::uint64_t>(seed));
        simulator_violations += result.metrics.starvation_violations;
        const ParsedLog log = parse_decision_log(result.decision_log);
        Timestamp red_origin{};
        bool green = false;
        for (const auto& epoch : log.epochs) {
            max_index = std::max(max_index, epoch.snapshot.find(4)->index.value);
            const Timestamp t = epoch.snapshot.epoch;
            const bool next_green = epoch.decision.green_lane == 4;
            if (!green && next_green) {
                const Duration wait = t - red_origin;
                worst_s = std::max(worst_s, to_seconds(wait));
                violations += wait > bound ? 1 : 0;
            } else if (green && !next_green) {
                red_origin = t;
            }
            green = next_green;
        }
        const Timestamp end{std::chrono::seconds(kStarvationHorizonS)};
        if (!green && end - red_origin > bound) {
            ++violations;
        }
    }
    const bool ok = violations == 0 && simulator_violations == 0 && max_index <= kLightLaneMaxIndex;
    return {ok, fmt::format("{} seeds x {} s: {} violations (simulator: {}), worst red {:.1f} s <= {:.1f} s, "
                            "lane 4 max index {:.3f}",
                            kStarvationSeeds, kStarvationHorizonS, violations, simulator_violations, worst_s,
                            to_seconds(bound), max_index)};
}

// 5. Mirror normalization properties.
Outcome mirror()
{
    testkit::Gen gen(0x5EED5);
    const EvKeywordSet keywords;
    std::size_t failures = 0;
    for (int i = 0; i < kMirrorStrings; ++i) {
        const std::string text = gen.coin() ? gen.ascii(40) : gen.ocr_text();
        if (normalize_mirror(normalize_mirror(text)) != text) {
            ++failures;
        }
        const double confidence = gen.real(0.0, 1.0);
        const std::vector<OcrReading> captured = {{text, Orientation::AsCaptured, confidence}};
        const std::vector<OcrReading> normalized = {
            {normalize_mirror(text), Orientation::MirrorNormalized, confidence}};
        if (detect_emergency(captured, keywords, 0.5) != detect_emergency(normalized, keywords, 0.5)) {
            ++failures;
        }
    }
    const std::vector<OcrReading> hood = {{"ECNALUBMA", Orientation::AsCaptured, 0.9}};
    const EvDetection ev = detect_emergency(hood, keywords, 0.5);
    const bool ok = failures == 0 && ev.ambulance_count == 1 && ev.fire_count == 0;
    return {ok, fmt::format("{} strings, {} failures; ECNALUBMA -> {} ambulance, {} fire", kMirrorStrings, failures,
                            ev.ambulance_count, ev.fire_count)};
}

// 6. Replay and same-seed determinism for simulations and lockstep loopback.
Outcome determinism()
{
    const SystemConfig config;
    std::size_t divergences = 0;
    std::size_t epochs = 0;
    for (int seed = 1; seed <= kReplaySimSeeds; ++seed) {
        testkit::Gen gen(static_cast<std::uint64_t>(seed));
        const auto scenario = testkit::random_scenario(gen, config.controller, kReplaySimHorizonS);
        const auto first = sim::run_scenario(scenario, config, static_cast<std::uint64_t>(seed));
        const auto second = sim::run_scenario(scenario, config, static_cast<std::uint64_t>(seed));
        const ReplayVerdict verdict = replay(first.decision_log);
        divergences += verdict.consistent() ? 0 : 1;
        divergences += first.decision_log == second.decision_log ? 0 : 1;
        epochs += verdict.epochs;
    }
    net::LoopbackOptions options;
    options.duration = kReplayLoopbackDuration;
    options.seed = 11;
    options.arrival_rates = {{1, 0.4}, {2, 0.1}, {3, 0.25}, {4, 0.05}};
    options.ev_rate = 0.01;
    const auto first = net::run_loopback(options);
    const auto second = net::run_loopback(options);
    const ReplayVerdict verdict = replay(first.decision_log);
    divergences += verdict.consistent() ? 0 : 1;
    divergences += first.decision_log == second.decision_log ? 0 : 1;
    divergences += first.agent_logs == second.agent_logs ? 0 : 1;
    return {divergences == 0,
            fmt::format("{} simulations ({} epochs) + loopback ({} epochs): {} divergences", kReplaySimSeeds, epochs,
                        verdict.epochs, divergences)};
}

// 7. Same run with and without a reachable cloud serving the same config.
Outcome offline_equivalence()
{
    testkit::TempDir dir;
    const SystemConfig config;
    write_file_atomically(dir / "cloud.json", dump_config(config));
    write_file_atomically(dir / "local.json", dump_config(config));

    net::LoopbackOptions options;
    options.config = config;
    options.seed = 5;
    options.ev_rate = 0.005;
    const auto offline = net::run_loopback(options);

    net::CloudStub stub(dir / "cloud.json");
    stub.start();
    options.cloud_endpoint = stub.url();
    options.config_path = dir / "local.json";
    const auto online = net::run_loopback(options);
    const auto requests = stub.counters().requests;
    stub.stop();

    const bool ok = requests > 0 && offline.decision_log == online.decision_log;
    return {ok, fmt::format("{} epochs, {} cloud requests, logs {}", offline.stats.epochs, requests,
                            offline.decision_log == online.decision_log ? "identical" : "differ")};
}

struct BandwidthRun {
    std::uint64_t frames = 0;
    std::uint64_t edge_bytes = 0;
    std::uint64_t cloud_bytes = 0;
};

BandwidthRun bandwidth_run(Duration cadence, std::size_t& config_size)
{
    testkit::TempDir dir;
    SystemConfig config;
    config.controller.sample_interval_low = cadence;
    config.controller.sample_interval_mid = cadence;
    const std::string text = dump_config(config);
    config_size = text.size();
    write_file_atomically(dir / "cloud.json", text);
    write_file_atomically(dir / "local.json", text);

    net::CloudStub stub(dir / "cloud.json");
    stub.start();
    net::LoopbackOptions options;
    options.config = config;
    options.duration = kBandwidthDuration;
    options.cloud_endpoint = stub.url();
    options.config_path = dir / "local.json";
    const auto result = net::run_loopback(options);
    BandwidthRun run{result.frames_sent, result.agent_to_edge_bytes, stub.counters().total()};
    stub.stop();
    return run;
}

// 8. Cloud traffic stays flat as frame traffic grows.
Outcome bandwidth()
{
    std::size_t config_size = 0;
    const BandwidthRun base = bandwidth_run(kBandwidthCadence, config_size);
    const BandwidthRun dense = bandwidth_run(kBandwidthDenseCadence, config_size);
    const double edge_scaling = static_cast<double>(dense.edge_bytes) / static_cast<double>(base.edge_bytes);
    const double frame_scaling = static_cast<double>(dense.frames) / static_cast<double>(base.frames);
    const bool ok = base.cloud_bytes == dense.cloud_bytes &&
                    static_cast<double>(base.cloud_bytes) <= kCloudBytesPerConfigByte * config_size &&
                    edge_scaling >= kEdgeBytesMinScaling && frame_scaling >= kEdgeBytesMinScaling &&
                    base.edge_bytes > base.cloud_bytes;
    return {ok, fmt::format("3 s cadence: {} frames, edge {} B, cloud {} B (config {} B); 1 s cadence: {} frames, "
                            "edge {} B (x{:.2f}), cloud {} B",
                            base.frames, base.edge_bytes, base.cloud_bytes, config_size, dense.frames,
                            dense.edge_bytes, edge_scaling, dense.cloud_bytes)};
}

net::LatencyReport latency_run(Duration rtt)
{
    net::LoopbackOptions options;
    options.config.epoch_interval = kLatencyEpoch;
    options.config.controller.sample_interval_low = 1s;
    options.config.controller.sample_interval_mid = kLatencyEpoch;
    options.lockstep = false;
    options.duration = kLatencyRunDuration;
    options.emulated_rtt = rtt;
    const auto result = net::run_loopback(options);
    return net::measure_latency(result.decision_log, result.agent_log_list());
}

// 9. Live loopback: edge vs emulated cloud round trip.
Outcome latency()
{
    const auto start = std::chrono::steady_clock::now();
    const auto edge = latency_run(Duration::zero());
    const auto cloud = latency_run(kLatencyRtt);
    const double took = elapsed_s(start);
    const double gap = cloud.frame_to_decision.p50_ms - edge.frame_to_decision.p50_ms;
    const bool ok = edge.frame_to_decision.count > 0 && cloud.frame_to_decision.count > 0 &&
                    cloud.mode == "cloud" && gap >= kLatencyMinGapMs &&
                    edge.frame_to_decision.p95_ms < kEdgeP95BudgetMs && took < kLatencyBudgetS;
    return {ok, fmt::format("edge p50 {:.2f} ms p95 {:.2f} ms (n={}); cloud p50 {:.2f} ms (n={}); gap {:.1f} ms; "
                            "{:.1f} s",
                            edge.frame_to_decision.p50_ms, edge.frame_to_decision.p95_ms,
                            edge.frame_to_decision.count, cloud.frame_to_decision.p50_ms,
                            cloud.frame_to_decision.count, gap, took)};
}

// 10. Index arithmetic against exact long division, plus band boundaries.
Outcome index_oracle()
{
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::uint32_t count = 0; count < 100; ++count) {
        for (std::uint64_t g = 0; g < 20; ++g) {
            const std::uint64_t width_mm = 2'500 + 1'375 * g;
            const std::uint64_t length_mm = 8'000 + 9'125 * ((g * 7) % 20);
            const LaneGeometry geometry{static_cast<double>(width_mm) / 1000.0,
                                        static_cast<double>(length_mm) / 1000.0};
            const double got = compute_index(count, geometry).value;
            const double want = testkit::long_division_index(count, width_mm, length_mm);
            const double rel = want == 0.0 ? std::abs(got) : std::abs(got - want) / want;
            worst = std::max(worst, rel);
            ++checked;
        }
    }
    const Thresholds t{0.10, 0.25};
    const bool bounds = classify({0.10}, t) == CongestionBand::Low && classify({0.25}, t) == CongestionBand::High &&
                        classify({0.1000001}, t) == CongestionBand::Mid &&
                        classify({0.2499999}, t) == CongestionBand::Mid &&
                        classify(compute_index(10, {10.0, 10.0}), t) == CongestionBand::Low &&
                        classify(compute_index(25, {10.0, 10.0}), t) == CongestionBand::High;
    return {worst <= kIndexRelTolerance && bounds,
            fmt::format("{} grid points, worst relative error {:.3g}; boundaries {}", checked, worst,
                        bounds ? "C1 -> Low, C3 -> High" : "wrong")};
}

} // namespace

int main()
{
    spdlog::set_level(spdlog::level::warn);
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"weather-golden", weather_golden},
        {"emergency-examples", emergency_examples},
        {"single-green-safety", safety},
        {"starvation-bound", starvation},
        {"mirror-text", mirror},
        {"determinism-replay", determinism},
        {"offline-equivalence", offline_equivalence},
        {"bandwidth", bandwidth},
        {"latency-ordering", latency},
        {"index-oracle", index_oracle},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& [name, check] = criteria[i];
        Outcome outcome;
        try {
            outcome = check();
        } catch (const std::exception& e) {
            outcome = {false, std::string("threw: ") + e.what()};
        }
        failed += outcome.pass ? 0 : 1;
        std::cout << (outcome.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << name << ": " << outcome.detail
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
