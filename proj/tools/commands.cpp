#include "commands.hpp"

#include "edgesignal/codec.hpp"
#include "edgesignal/config.hpp"
#include "edgesignal/decision_log.hpp"
#include "edgesignal/errors.hpp"
#include "edgesignal/frame.hpp"
#include "edgesignal/net/agent.hpp"
#include "edgesignal/net/clock.hpp"
#include "edgesignal/net/cloud.hpp"
#include "edgesignal/net/latency.hpp"
#include "edgesignal/net/server.hpp"
#include "edgesignal/sim/scenario.hpp"
#include "edgesignal/sim/simulator.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <csignal>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <thread>

namespace edgesignal::cli {

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;

SystemConfig load_or_default(const std::string& path)
{
    if (path.empty()) {
        return SystemConfig{};
    }
    return load_config(path);
}

std::string utc_now()
{
    const auto now = std::chrono::floor<std::chrono::milliseconds>(std::chrono::system_clock::now());
    return fmt::format("{:%Y-%m-%dT%H:%M:%S}Z", now);
}

std::string fnv1a_hex(std::string_view text)
{
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", hash);
}

std::unique_ptr<std::ofstream> open_output(const std::string& path)
{
    if (path.empty()) {
        return nullptr;
    }
    auto out = std::make_unique<std::ofstream>(path, std::ios::out | std::ios::trunc);
    if (!*out) {
        throw InputError("cannot open '" + path + "' for writing");
    }
    return out;
}

/// Blocks until SIGINT/SIGTERM, the optional deadline, or `done` turns true.
/// The signals are blocked process-wide in main().
void wait_for_shutdown(std::optional<double> duration_s, const std::atomic<bool>* done = nullptr)
{
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    const auto deadline = duration_s
                              ? std::optional(std::chrono::steady_clock::now() +
                                              std::chrono::duration<double>(*duration_s))
                              : std::nullopt;
    const timespec poll{0, 100'000'000};
    for (;;) {
        if (sigtimedwait(&signals, nullptr, &poll) > 0) {
            spdlog::info("shutting down on signal");
            return;
        }
        if (done != nullptr && done->load()) {
            return;
        }
        if (deadline && std::chrono::steady_clock::now() >= *deadline) {
            return;
        }
    }
}

void check_non_negative(const char* flag, const std::optional<double>& value)
{
    if (value && *value < 0.0) {
        throw InputError(std::string(flag) + ": must be non-negative");
    }
}

// --- decide -----------------------------------------------------------------

struct FramesDocument {
    std::vector<DetectionFrame> frames;
    std::optional<LaneId> current_green;
    std::optional<Duration> green_elapsed;
    std::map<LaneId, Duration> red_elapsed;
};

std::vector<DetectionFrame> frames_from_array(const Json& array, const std::string& path)
{
    if (!array.is_array()) {
        throw InputError(path + ": expected an array of frames");
    }
    std::vector<DetectionFrame> frames;
    for (std::size_t i = 0; i < array.size(); ++i) {
        frames.push_back(frame_from_json(array[i], path + "[" + std::to_string(i) + "]"));
    }
    return frames;
}

FramesDocument frames_document_from_json(const Json& j)
{
    Fields f(j, "frames_document");
    if (f.unsigned_int("schema") != kSchemaVersion) {
        throw InputError("frames_document.schema: unsupported version");
    }
    FramesDocument doc;
    doc.frames = frames_from_array(f.at("frames"), f.path("frames"));
    if (f.has("current_green")) {
        doc.current_green = static_cast<LaneId>(f.unsigned_int("current_green"));
    }
    if (f.has("green_elapsed_s")) {
        doc.green_elapsed = f.seconds("green_elapsed_s");
    }
    if (f.has("red_elapsed_s")) {
        const Json& red = f.at("red_elapsed_s");
        if (!red.is_object()) {
            throw InputError(f.path("red_elapsed_s") + ": expected an object keyed by lane id");
        }
        for (const auto& [key, value] : red.items()) {
            LaneId lane = 0;
            try {
                lane = static_cast<LaneId>(std::stoul(key));
            } catch (const std::exception&) {
                throw InputError(f.path("red_elapsed_s") + ": '" + key + "' is not a lane id");
            }
            if (!value.is_number() || value.get<double>() < 0.0) {
                throw InputError(f.path("red_elapsed_s") + "." + key + ": expected seconds >= 0");
            }
            doc.red_elapsed[lane] = duration_from_seconds(value.get<double>());
        }
    }
    f.finish();
    return doc;
}

/// Accepts a frames document, a bare JSON array of frames, or one frame per line.
FramesDocument parse_frames(std::string_view text)
{
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw ParseError(0, "frames file is empty");
    }
    FramesDocument doc;
    const Json whole = Json::parse(text, nullptr, false);
    if (!whole.is_discarded()) {
        if (whole.is_array()) {
            doc.frames = frames_from_array(whole, "frames");
        } else if (whole.is_object() && whole.contains("frames")) {
            doc = frames_document_from_json(whole);
        } else {
            doc.frames.push_back(frame_from_json(whole, "frame"));
        }
        return doc;
    }

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        ++line_no;
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        const auto line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        try {
            doc.frames.push_back(frame_from_json(Json::parse(line), "frame"));
        } catch (const Json::exception& e) {
            throw ParseError(line_no, e.what());
        } catch (const ParseError&) {
            throw;
        } catch (const InputError& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return doc;
}

IntersectionSnapshot snapshot_from_frames(const FramesDocument& doc,
                                          const ControllerConfig& config,
                                          LaneId current_green)
{
    const auto lanes = config.lane_ids();
    const std::set<LaneId> configured(lanes.begin(), lanes.end());
    std::map<LaneId, const DetectionFrame*> by_lane;
    Timestamp epoch{};
    for (const auto& frame : doc.frames) {
        if (!configured.contains(frame.lane_id)) {
            throw InputError(fmt::format("frames: lane {} is not configured", frame.lane_id));
        }
        if (!by_lane.emplace(frame.lane_id, &frame).second) {
            throw InputError(fmt::format("frames: lane {} appears more than once", frame.lane_id));
        }
        frame.validate();
        epoch = std::max(epoch, frame.captured_at);
    }
    for (const auto& [lane, red] : doc.red_elapsed) {
        if (!configured.contains(lane)) {
            throw InputError(fmt::format("red_elapsed_s: lane {} is not configured", lane));
        }
        if (lane == current_green && red != Duration::zero()) {
            throw InputError(fmt::format("red_elapsed_s: lane {} is the current green", lane));
        }
    }

    IntersectionSnapshot snapshot;
    snapshot.epoch = epoch;
    for (const LaneId lane : lanes) {
        const auto it = by_lane.find(lane);
        if (it == by_lane.end()) {
            throw InputError(fmt::format("frames: no frame for lane {}", lane));
        }
        const LaneObservation obs = observe(*it->second, config);
        LaneState state;
        state.lane_id = lane;
        state.index = obs.index;
        state.ev = obs.ev;
        state.last_frame_at = obs.last_frame_at;
        if (const auto red = doc.red_elapsed.find(lane); red != doc.red_elapsed.end()) {
            state.red_elapsed = red->second;
        }
        snapshot.lanes.push_back(state);
    }
    return snapshot;
}

} // namespace

Command register_simulate(CLI::App& app)
{
    auto* sub = app.add_subcommand("simulate", "Run a scenario through the discrete-event simulator");
    struct Args {
        std::string scenario;
        std::string config;
        std::uint64_t seed = 1;
        std::string out;
    };
    auto args = std::make_shared<Args>();
    sub->add_option("--scenario", args->scenario, "Scenario document (JSON or JSONL)")->required();
    sub->add_option("--config", args->config, "System config document; defaults apply when omitted");
    sub->add_option("--seed", args->seed, "Master seed for every random stream")->capture_default_str();
    sub->add_option("--out", args->out, "Output directory")->required();

    return {sub, [args]() {
                const std::string started_at = utc_now();
                const SystemConfig config = load_or_default(args->config);
                const std::string scenario_text = read_file(args->scenario);
                sim::Scenario scenario;
                try {
                    scenario = sim::parse_scenario(scenario_text);
                } catch (const ParseError& e) {
                    throw InputError(args->scenario + ": " + e.what());
                }
                const sim::SimulationResult result = sim::run_scenario(scenario, config, args->seed);

                const fs::path out(args->out);
                fs::create_directories(out);
                const fs::path log_path = out / "decisions.jsonl";
                const fs::path metrics_path = out / "metrics.json";
                const fs::path csv_path = out / "metrics.csv";
                const fs::path manifest_path = out / "manifest.json";
                write_file_atomically(log_path, result.decision_log);
                write_file_atomically(metrics_path, sim::to_json(result.metrics).dump(2) + "\n");
                write_file_atomically(csv_path, sim::metrics_csv(result.metrics));

                const Json manifest = {
                    {"schema", kSchemaVersion},
                    {"tool_version", std::string(kToolVersion)},
                    {"command", "simulate"},
                    {"config_path", args->config},
                    {"scenario_path", args->scenario},
                    {"scenario_fnv1a", fnv1a_hex(scenario_text)},
                    {"seed", args->seed},
                    {"config", to_json(config)},
                    {"outputs",
                     {{"decision_log", log_path.string()},
                      {"metrics", metrics_path.string()},
                      {"metrics_csv", csv_path.string()}}},
                    {"started_at", started_at},
                    {"finished_at", utc_now()},
                };
                write_file_atomically(manifest_path, manifest.dump(2) + "\n");

                std::cout << fmt::format("{} epochs, {} EV arrivals, {} starvation violations -> {}\n",
                                         result.metrics.total_decisions, result.metrics.ev_arrivals,
                                         result.metrics.starvation_violations, out.string());
                return kExitOk;
            }};
}

Command register_decide(CLI::App& app)
{
    auto* sub = app.add_subcommand("decide", "Make one decision from a set of per-lane frames");
    struct Args {
        std::string frames;
        std::string config;
    };
    auto args = std::make_shared<Args>();
    sub->add_option("--frames", args->frames, "Frames document, JSON array or one frame per line")
        ->required();
    sub->add_option("--config", args->config, "System config document; defaults apply when omitted");

    return {sub, [args]() {
                const SystemConfig config = load_or_default(args->config);
                FramesDocument doc;
                try {
                    doc = parse_frames(read_file(args->frames));
                } catch (const ParseError& e) {
                    throw InputError(args->frames + ": " + e.what());
                }
                const ControllerConfig& controller = config.controller;
                const LaneId current_green = doc.current_green.value_or(controller.lanes.front().lane_id);
                if (!std::ranges::any_of(controller.lanes,
                                         [&](const LaneConfig& l) { return l.lane_id == current_green; })) {
                    throw InputError(fmt::format("current_green: lane {} is not configured", current_green));
                }
                const IntersectionSnapshot snapshot = snapshot_from_frames(doc, controller, current_green);
                Decision decision;
                try {
                    decision = decide(snapshot, controller, current_green,
                                      doc.green_elapsed.value_or(controller.min_green));
                } catch (const StructuralError& e) {
                    throw InputError(e.what());
                }
                std::cout << to_json(decision).dump(2) << "\n";
                return kExitOk;
            }};
}

Command register_serve(CLI::App& app)
{
    auto* sub = app.add_subcommand("serve", "Run the edge decision server");
    struct Args {
        std::string config;
        std::string listen = "127.0.0.1:7400";
        std::string log;
        std::string cloud;
        std::optional<double> sync_interval_s;
        std::optional<double> emulated_rtt_s;
        std::optional<double> epoch_interval_s;
        std::optional<double> duration_s;
    };
    auto args = std::make_shared<Args>();
    sub->add_option("--config", args->config, "System config document; also the sync target");
    sub->add_option("--listen", args->listen, "host:port to listen on (port 0 picks one)")
        ->capture_default_str();
    sub->add_option("--log", args->log, "Decision log output path");
    sub->add_option("--cloud", args->cloud, "Cloud config endpoint, e.g. http://host:port");
    sub->add_option("--sync-interval", args->sync_interval_s, "Seconds between config syncs (default 300)");
    sub->add_option("--emulated-rtt", args->emulated_rtt_s, "Emulated controller round trip in seconds");
    sub->add_option("--epoch-interval", args->epoch_interval_s, "Overrides the config's epoch interval");
    sub->add_option("--duration", args->duration_s, "Stop after this many seconds");

    return {sub, [args]() {
                check_non_negative("--emulated-rtt", args->emulated_rtt_s);
                check_non_negative("--duration", args->duration_s);
                if (!args->cloud.empty() && args->config.empty()) {
                    throw InputError("--cloud needs --config, the file sync keeps up to date");
                }
                net::ServerOptions options;
                std::tie(options.host, options.port) = net::split_host_port(args->listen);
                options.config = load_or_default(args->config);
                if (args->epoch_interval_s) {
                    options.config.epoch_interval = duration_from_seconds(*args->epoch_interval_s);
                    options.config.validate();
                }
                if (args->emulated_rtt_s) {
                    options.emulated_rtt = duration_from_seconds(*args->emulated_rtt_s);
                }
                options.cloud_endpoint = args->cloud;
                options.config_path = args->config;
                if (args->sync_interval_s) {
                    if (*args->sync_interval_s <= 0.0) {
                        throw InputError("--sync-interval: must be positive");
                    }
                    options.sync_interval = duration_from_seconds(*args->sync_interval_s);
                }

                const auto log = open_output(args->log);
                net::SystemClock clock;
                net::EdgeServer server(options, clock, log.get());
                server.start();
                std::cout << fmt::format("listening on {}:{}", options.host, server.port()) << std::endl;

                wait_for_shutdown(args->duration_s);
                server.stop();
                const auto stats = server.stats();
                spdlog::info("served {} epochs, {} frames, {} agents accepted, {} rejected", stats.epochs,
                             stats.frames, stats.accepted, stats.rejected);
                return kExitOk;
            }};
}

Command register_agent(CLI::App& app)
{
    auto* sub = app.add_subcommand("agent", "Run a lane camera agent against an edge server");
    struct Args {
        std::string server = "127.0.0.1:7400";
        LaneId lane = 1;
        std::string replay;
        std::string config;
        double arrival_rate = 0.2;
        double ev_rate = 0.0;
        std::string weather = "ClearSunny";
        std::uint64_t seed = 1;
        std::string log;
        double lead_ms = 10.0;
        std::optional<int> max_attempts;
        std::optional<double> duration_s;
    };
    auto args = std::make_shared<Args>();
    sub->add_option("--server", args->server, "Edge server host:port")->capture_default_str();
    sub->add_option("--lane", args->lane, "Lane id this agent watches")->capture_default_str();
    sub->add_option("--replay", args->replay, "Replay recorded frames instead of simulating a camera");
    sub->add_option("--config", args->config, "System config document (geometry, weather, detector)");
    sub->add_option("--arrival-rate", args->arrival_rate, "Simulated arrivals per second")
        ->capture_default_str();
    sub->add_option("--ev-rate", args->ev_rate, "Simulated ambulance arrivals per second")
        ->capture_default_str();
    sub->add_option("--weather", args->weather, "Simulated weather profile")->capture_default_str();
    sub->add_option("--seed", args->seed, "Seed for the simulated camera")->capture_default_str();
    sub->add_option("--log", args->log, "Actuation log output path");
    sub->add_option("--lead-ms", args->lead_ms, "Send frames this long before each epoch boundary")
        ->capture_default_str();
    sub->add_option("--max-attempts", args->max_attempts, "Give up after this many connection attempts");
    sub->add_option("--duration", args->duration_s, "Stop after this many seconds");

    return {sub, [args]() {
                check_non_negative("--duration", args->duration_s);
                if (args->lead_ms < 0.0) {
                    throw InputError("--lead-ms: must be non-negative");
                }
                if (args->max_attempts && *args->max_attempts < 1) {
                    throw InputError("--max-attempts: must be at least 1");
                }
                const SystemConfig config = load_or_default(args->config);
                net::AgentOptions options;
                std::tie(options.host, options.port) = net::split_host_port(args->server);
                options.lane_id = args->lane;
                options.max_attempts = args->max_attempts;
                options.lead = duration_from_seconds(args->lead_ms / 1000.0);

                std::unique_ptr<net::FrameSource> source;
                if (!args->replay.empty()) {
                    source = std::make_unique<net::ReplaySource>(net::ReplaySource::load(args->replay, args->lane));
                } else {
                    if (args->arrival_rate < 0.0 || args->ev_rate < 0.0) {
                        throw InputError("--arrival-rate and --ev-rate must be non-negative");
                    }
                    net::CameraParams params;
                    params.geometry = config.controller.lane(args->lane).geometry;
                    params.arrival_rate = args->arrival_rate;
                    params.ev_rate = args->ev_rate;
                    params.saturation_rate = config.simulation.saturation_rate;
                    params.weather = config.weather.at(weather_from_string(args->weather));
                    params.base_confidence = config.simulation.base_ocr_confidence;
                    source = std::make_unique<net::SimulatedCamera>(args->lane, params, args->seed);
                }

                const auto log = open_output(args->log);
                net::SystemClock clock;
                net::LaneAgent agent(options, *source, clock, log.get());
                std::atomic<bool> finished{false};
                std::thread watcher([&] {
                    wait_for_shutdown(args->duration_s, &finished);
                    agent.stop();
                });
                try {
                    agent.run();
                } catch (...) {
                    finished = true;
                    watcher.join();
                    throw;
                }
                finished = true;
                watcher.join();
                spdlog::info("lane {}: {} frames sent over {} connections", args->lane, agent.frames_sent(),
                             agent.connections());
                return kExitOk;
            }};
}

Command register_replay(CLI::App& app)
{
    auto* sub = app.add_subcommand("replay", "Recompute every decision in a log and compare");
    auto log_path = std::make_shared<std::string>();
    sub->add_option("log", *log_path, "Decision log to check")->required();

    return {sub, [log_path]() {
                ReplayVerdict verdict;
                try {
                    verdict = replay(read_file(*log_path));
                } catch (const ParseError& e) {
                    throw InputError(*log_path + ": " + e.what());
                }
                std::cout << verdict.summary() << "\n";
                if (verdict.consistent()) {
                    return kExitOk;
                }
                std::cerr << "  expected: " << verdict.first_divergence->expected << "\n"
                          << "  actual:   " << verdict.first_divergence->actual << "\n";
                return kExitInput;
            }};
}

Command register_latency(CLI::App& app)
{
    auto* sub = app.add_subcommand("latency", "Summarize frame-to-decision and actuation latency");
    struct Args {
        std::string log;
        std::vector<std::string> agent_logs;
        std::string out;
    };
    auto args = std::make_shared<Args>();
    sub->add_option("--log", args->log, "Edge server decision log")->required();
    sub->add_option("--agent-log", args->agent_logs, "Agent actuation log (repeatable)");
    sub->add_option("--out", args->out, "Also write the report here");

    return {sub, [args]() {
                std::vector<std::string> agent_logs;
                for (const auto& path : args->agent_logs) {
                    agent_logs.push_back(read_file(path));
                }
                const net::LatencyReport report = net::measure_latency(read_file(args->log), agent_logs);
                const std::string text = net::to_json(report).dump(2) + "\n";
                if (!args->out.empty()) {
                    write_file_atomically(args->out, text);
                }
                std::cout << text;
                return kExitOk;
            }};
}

Command register_cloud(CLI::App& app)
{
    auto* sub = app.add_subcommand("cloud", "Serve a config document over HTTP for config sync");
    struct Args {
        std::string config_file;
        std::string listen = "127.0.0.1:0";
        std::optional<double> duration_s;
    };
    auto args = std::make_shared<Args>();
    sub->add_option("--config-file", args->config_file, "Config document to publish")->required();
    sub->add_option("--listen", args->listen, "host:port to listen on (port 0 picks one)")
        ->capture_default_str();
    sub->add_option("--duration", args->duration_s, "Stop after this many seconds");

    return {sub, [args]() {
                check_non_negative("--duration", args->duration_s);
                load_config(args->config_file);
                const auto [host, port] = net::split_host_port(args->listen);
                net::CloudStub stub(args->config_file, host, port);
                stub.start();
                std::cout << "serving " << stub.url() << "/config.json" << std::endl;
                wait_for_shutdown(args->duration_s);
                stub.stop();
                const auto counters = stub.counters();
                spdlog::info("{} requests, {} bytes in, {} bytes out", counters.requests, counters.bytes_in,
                             counters.bytes_out);
                return kExitOk;
            }};
}

} // namespace edgesignal::cli
