#include "edgesignal/sim/simulator.hpp"

#include "edgesignal/decision_log.hpp"
#include "edgesignal/sim/detector.hpp"
#include "edgesignal/sim/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <sstream>

namespace edgesignal::sim {

namespace {

enum class EventClass { Scenario = 0, Discharge = 1, Actuation = 2, Sample = 3, Epoch = 4 };

struct Event {
    Timestamp at{};
    EventClass cls = EventClass::Epoch;
    std::uint64_t seq = 0;
    /// Scenario event index, or lane id for per-lane events and actuations.
    std::uint64_t target = 0;
    std::uint64_t generation = 0;
};

struct Later {
    bool operator()(const Event& a, const Event& b) const
    {
        if (a.at != b.at) {
            return a.at > b.at;
        }
        if (a.cls != b.cls) {
            return a.cls > b.cls;
        }
        return a.seq > b.seq;
    }
};

struct Vehicle {
    Timestamp arrived_at{};
    std::optional<EvKind> ev;
};

struct LaneSim {
    LaneSim(LaneConfig lane, std::uint64_t seed) : config(lane), rng(seed) {}

    LaneConfig config;
    RngStream rng;
    std::deque<Vehicle> queue;
    std::uint32_t ambulances = 0;
    std::uint32_t fires = 0;
    std::vector<Timestamp> evs_waiting;

    std::uint64_t arrived = 0;
    std::uint64_t discharged = 0;
    Duration wait_sum{0};
    Duration wait_max{0};
    Duration green_time{0};
    std::uint64_t green_grants = 0;
    Duration max_red{0};

    std::optional<DetectionFrame> latest;
    Duration cadence{0};
    Duration requested_cadence{0};
    Timestamp next_sample_at{};
    std::uint64_t sample_gen = 0;
    std::uint64_t discharge_gen = 0;
    bool discharge_pending = false;

    LaneQueue snapshot() const
    {
        return {config.lane_id, static_cast<std::uint32_t>(queue.size()), ambulances, fires, config.geometry};
    }
};

class Simulation {
public:
    Simulation(const Scenario& scenario, const SystemConfig& config, std::uint64_t seed)
        : scenario_(scenario),
          config_(config),
          engine_(config.controller, Timestamp{}),
          weather_(config.weather.at(scenario.initial_weather)),
          headway_(duration_from_seconds(1.0 / config.simulation.saturation_rate))
    {
        for (const auto& lane : config.controller.lanes) {
            LaneSim sim(lane, stream_seed(seed, lane.lane_id));
            sim.cadence = config.controller.sample_interval_low;
            sim.requested_cadence = sim.cadence;
            lanes_.emplace(lane.lane_id, std::move(sim));
        }
        actuated_green_ = engine_.signals().current_green();
        lanes_.at(actuated_green_).green_grants = 1;
    }

    SimulationResult run()
    {
        std::ostringstream log;
        writer_.emplace(log);
        LogHeader header;
        header.source = "simulator";
        header.config = config_;
        writer_->write_header(header);

        for (std::size_t i = 0; i < scenario_.events.size(); ++i) {
            push(scenario_.events[i].at, EventClass::Scenario, i);
        }
        for (auto& [id, lane] : lanes_) {
            lane.next_sample_at = Timestamp{};
            push(lane.next_sample_at, EventClass::Sample, id, lane.sample_gen);
        }
        push(Timestamp{}, EventClass::Epoch, 0);

        while (!events_.empty()) {
            const Event event = events_.top();
            events_.pop();
            now_ = event.at;
            if (event.cls == EventClass::Scenario && handle_scenario(event.target)) {
                break;
            }
            switch (event.cls) {
            case EventClass::Scenario:
                break;
            case EventClass::Discharge:
                handle_discharge(event.target, event.generation);
                break;
            case EventClass::Actuation:
                handle_actuation(static_cast<LaneId>(event.target));
                break;
            case EventClass::Sample:
                handle_sample(event.target, event.generation);
                break;
            case EventClass::Epoch:
                handle_epoch(event.target);
                break;
            }
        }
        return {log.str(), finish()};
    }

private:
    void push(Timestamp at, EventClass cls, std::uint64_t target, std::uint64_t generation = 0)
    {
        events_.push({at, cls, next_seq_++, target, generation});
    }

    /// Returns true at End.
    bool handle_scenario(std::size_t index)
    {
        const auto& kind = scenario_.events[index].kind;
        if (const auto* a = std::get_if<Arrival>(&kind)) {
            auto& lane = lanes_.at(a->lane_id);
            for (std::uint32_t i = 0; i < a->n_vehicles; ++i) {
                lane.queue.push_back({now_, std::nullopt});
            }
            lane.arrived += a->n_vehicles;
            start_discharge_if_idle(lane);
        } else if (const auto* ev = std::get_if<EvArrival>(&kind)) {
            auto& lane = lanes_.at(ev->lane_id);
            lane.queue.push_back({now_, ev->kind});
            (ev->kind == EvKind::Ambulance ? lane.ambulances : lane.fires) += 1;
            lane.arrived += 1;
            ++ev_arrivals_;
            if (lane.config.lane_id == actuated_green_) {
                record_ev_delay(Duration::zero());
            } else {
                lane.evs_waiting.push_back(now_);
            }
            start_discharge_if_idle(lane);
        } else if (const auto* w = std::get_if<WeatherChange>(&kind)) {
            weather_ = config_.weather.at(w->profile);
        } else {
            return true;
        }
        return false;
    }

    void start_discharge_if_idle(LaneSim& lane)
    {
        if (lane.config.lane_id == actuated_green_ && !lane.discharge_pending && !lane.queue.empty()) {
            lane.discharge_pending = true;
            push(now_ + headway_, EventClass::Discharge, lane.config.lane_id, lane.discharge_gen);
        }
    }

    void handle_discharge(LaneId id, std::uint64_t generation)
    {
        auto& lane = lanes_.at(id);
        if (generation != lane.discharge_gen) {
            return;
        }
        lane.discharge_pending = false;
        if (id != actuated_green_ || lane.queue.empty()) {
            return;
        }
        auto it = lane.queue.begin();
        if (lane.ambulances + lane.fires > 0) {
            it = std::find_if(lane.queue.begin(), lane.queue.end(), [](const Vehicle& v) { return v.ev.has_value(); });
            (*it->ev == EvKind::Ambulance ? lane.ambulances : lane.fires) -= 1;
        }
        const Duration wait = now_ - it->arrived_at;
        lane.queue.erase(it);
        lane.discharged += 1;
        lane.wait_sum += wait;
        lane.wait_max = std::max(lane.wait_max, wait);
        start_discharge_if_idle(lane);
    }

    void handle_actuation(LaneId incoming)
    {
        if (incoming == actuated_green_) {
            return;
        }
        auto& outgoing = lanes_.at(actuated_green_);
        outgoing.green_time += now_ - actuated_since_;
        outgoing.discharge_gen += 1;
        outgoing.discharge_pending = false;

        actuated_green_ = incoming;
        actuated_since_ = now_;
        auto& lane = lanes_.at(incoming);
        lane.discharge_gen += 1;
        lane.discharge_pending = false;
        for (const auto arrived_at : lane.evs_waiting) {
            record_ev_delay(now_ - arrived_at);
        }
        lane.evs_waiting.clear();
        start_discharge_if_idle(lane);
    }

    void handle_sample(LaneId id, std::uint64_t generation)
    {
        auto& lane = lanes_.at(id);
        if (generation != lane.sample_gen) {
            return;
        }
        lane.latest = detector_model(lane.snapshot(), weather_, lane.rng, now_,
                                     config_.simulation.base_ocr_confidence);
        lane.requested_cadence = lane.cadence;
        lane.next_sample_at = now_ + lane.cadence;
        push(lane.next_sample_at, EventClass::Sample, id, lane.sample_gen);
    }

    void handle_epoch(std::uint64_t count)
    {
        std::vector<LaneObservation> observations;
        for (const auto& [id, lane] : lanes_) {
            LaneObservation obs;
            obs.lane_id = id;
            if (lane.latest) {
                obs = observe(*lane.latest, config_.controller);
                obs.stale = frame_is_stale(lane.latest->captured_at, now_,
                                           std::max(lane.cadence, lane.requested_cadence));
            }
            observations.push_back(obs);
        }
        const EpochResult result = engine_.run_epoch(now_, observations);
        ++decisions_;

        EpochRecord record;
        record.seq = decisions_;
        record.snapshot = result.snapshot;
        record.current_green = result.current_green;
        record.green_elapsed = result.green_elapsed;
        record.decision = result.decision;
        record.decided_at = now_;
        writer_->write_epoch(record);

        const LaneId granted = result.decision.green_lane;
        if (granted != result.current_green) {
            const Duration waited = result.snapshot.find(granted)->red_elapsed;
            auto& lane = lanes_.at(granted);
            lane.max_red = std::max(lane.max_red, waited);
            lane.green_grants += 1;
            if (waited > starvation_bound()) {
                ++starvation_violations_;
            }
            push(now_ + config_.simulation.actuation_latency, EventClass::Actuation, granted);
        }

        for (auto& [id, lane] : lanes_) {
            const Duration cadence = result.decision.next_sample_interval.at(id);
            if (cadence < lane.cadence && lane.next_sample_at > now_ + cadence) {
                lane.sample_gen += 1;
                lane.next_sample_at = now_ + cadence;
                push(lane.next_sample_at, EventClass::Sample, id, lane.sample_gen);
            }
            lane.cadence = cadence;
        }
        push(Timestamp{} + config_.epoch_interval * static_cast<Duration::rep>(count + 1), EventClass::Epoch,
             count + 1);
    }

    void record_ev_delay(Duration delay)
    {
        ++ev_served_;
        ev_delay_sum_ += delay;
        ev_delay_max_ = std::max(ev_delay_max_, delay);
    }

    Duration starvation_bound() const
    {
        return config_.controller.threshold_time + config_.controller.min_green + config_.epoch_interval;
    }

    MetricsReport finish()
    {
        MetricsReport report;
        const Duration horizon = now_.time_since_epoch();
        report.horizon_s = to_seconds(horizon);
        lanes_.at(actuated_green_).green_time += now_ - actuated_since_;
        const auto& signals = engine_.signals();
        for (auto& [id, lane] : lanes_) {
            if (decisions_ > 0 && id != signals.current_green()) {
                const Duration running = signals.red_elapsed(id, now_);
                lane.max_red = std::max(lane.max_red, running);
                if (running > starvation_bound()) {
                    ++starvation_violations_;
                }
            }
            LaneMetrics m;
            m.lane_id = id;
            m.arrived = lane.arrived;
            m.discharged = lane.discharged;
            m.queued_at_end = lane.queue.size();
            if (lane.discharged > 0) {
                m.mean_wait_s = to_seconds(lane.wait_sum) / static_cast<double>(lane.discharged);
            }
            m.max_wait_s = to_seconds(lane.wait_max);
            if (horizon > Duration::zero()) {
                m.green_share = to_seconds(lane.green_time) / to_seconds(horizon);
            }
            m.green_grants = decisions_ > 0 ? lane.green_grants : 0;
            m.max_red_s = to_seconds(lane.max_red);
            report.lanes.push_back(m);
        }
        report.ev_arrivals = ev_arrivals_;
        report.ev_served = ev_served_;
        if (ev_served_ > 0) {
            report.ev_mean_delay_s = to_seconds(ev_delay_sum_) / static_cast<double>(ev_served_);
        }
        report.ev_max_delay_s = to_seconds(ev_delay_max_);
        report.total_decisions = decisions_;
        report.starvation_bound_s = to_seconds(starvation_bound());
        report.starvation_violations = starvation_violations_;
        return report;
    }

    const Scenario& scenario_;
    const SystemConfig& config_;
    DecisionEngine engine_;
    WeatherProfile weather_;
    Duration headway_;
    std::map<LaneId, LaneSim> lanes_;
    std::priority_queue<Event, std::vector<Event>, Later> events_;
    std::optional<DecisionLogWriter> writer_;
    std::uint64_t next_seq_ = 0;
    Timestamp now_{};
    LaneId actuated_green_ = 0;
    Timestamp actuated_since_{};
    std::uint64_t decisions_ = 0;
    std::uint64_t starvation_violations_ = 0;
    std::uint64_t ev_arrivals_ = 0;
    std::uint64_t ev_served_ = 0;
    Duration ev_delay_sum_{0};
    Duration ev_delay_max_{0};
};

} // namespace

SimulationResult run_scenario(const Scenario& scenario, const SystemConfig& config, std::uint64_t seed)
{
    config.validate();
    scenario.validate(config.controller);
    return Simulation(scenario, config, seed).run();
}

Json to_json(const MetricsReport& report)
{
    Json lanes = Json::array();
    for (const auto& lane : report.lanes) {
        lanes.push_back({{"lane_id", lane.lane_id},
                         {"arrived", lane.arrived},
                         {"discharged", lane.discharged},
                         {"queued_at_end", lane.queued_at_end},
                         {"mean_wait_s", lane.mean_wait_s},
                         {"max_wait_s", lane.max_wait_s},
                         {"green_share", lane.green_share},
                         {"green_grants", lane.green_grants},
                         {"max_red_s", lane.max_red_s}});
    }
    return {{"schema", kSchemaVersion},
            {"horizon_s", report.horizon_s},
            {"lanes", std::move(lanes)},
            {"ev_arrivals", report.ev_arrivals},
            {"ev_served", report.ev_served},
            {"ev_mean_delay_s", report.ev_mean_delay_s},
            {"ev_max_delay_s", report.ev_max_delay_s},
            {"total_decisions", report.total_decisions},
            {"starvation_bound_s", report.starvation_bound_s},
            {"starvation_violations", report.starvation_violations}};
}

std::string metrics_csv(const MetricsReport& report)
{
    std::string out = "scope,metric,value\n";
    const auto row = [&out](std::string_view scope, std::string_view metric, auto value) {
        out += fmt::format("{},{},{}\n", scope, metric, value);
    };
    for (const auto& l : report.lanes) {
        const std::string scope = fmt::format("lane{}", l.lane_id);
        row(scope, "arrived", l.arrived);
        row(scope, "discharged", l.discharged);
        row(scope, "queued_at_end", l.queued_at_end);
        row(scope, "mean_wait_s", l.mean_wait_s);
        row(scope, "max_wait_s", l.max_wait_s);
        row(scope, "green_share", l.green_share);
        row(scope, "green_grants", l.green_grants);
        row(scope, "max_red_s", l.max_red_s);
    }
    row("all", "horizon_s", report.horizon_s);
    row("all", "ev_arrivals", report.ev_arrivals);
    row("all", "ev_served", report.ev_served);
    row("all", "ev_mean_delay_s", report.ev_mean_delay_s);
    row("all", "ev_max_delay_s", report.ev_max_delay_s);
    row("all", "total_decisions", report.total_decisions);
    row("all", "starvation_bound_s", report.starvation_bound_s);
    row("all", "starvation_violations", report.starvation_violations);
    return out;
}

} // namespace edgesignal::sim
