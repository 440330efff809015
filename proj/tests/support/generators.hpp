#pragma once

// Hand-rolled generators for property tests. Every generator draws from an
// explicit std::mt19937_64 so failures reproduce from the printed seed.

#include "edgesignal/controller.hpp"
#include "edgesignal/emergency.hpp"

#include <random>
#include <string>
#include <vector>

namespace edgesignal::testkit {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi)
    {
        return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng_);
    }
    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    bool coin(double p = 0.5) { return real(0.0, 1.0) < p; }

    std::string ascii(std::size_t max_len, std::string_view alphabet = {})
    {
        static constexpr std::string_view printable =
            " !\"#$%&'()*+,-./0123456789:;<=>?@ABCDEFGHIJKLMNOPQRSTUVWXYZ[\\]^_`"
            "abcdefghijklmnopqrstuvwxyz{|}~";
        const auto chars = alphabet.empty() ? printable : alphabet;
        std::string s(uniform(0, max_len), ' ');
        for (auto& c : s) {
            c = chars[uniform(0, chars.size() - 1)];
        }
        return s;
    }

    /// Text likely to contain keywords, mirrored or not, in mixed case.
    std::string ocr_text()
    {
        static const std::vector<std::string> pieces = {
            "AMBULANCE", "ECNALUBMA", "FIRE", "ERIF", "ambulance", "Fire", "BRIGADE", "BUS",
            "7",         " ",         "TAXI", "ECNA", "LUBMA",    "FI",   "RE"};
        std::string s;
        const auto n = uniform(1, 4);
        for (std::uint64_t i = 0; i < n; ++i) {
            s += coin(0.7) ? pieces[uniform(0, pieces.size() - 1)] : ascii(4);
        }
        return s.empty() ? std::string("X") : s;
    }

    OcrReading reading()
    {
        OcrReading r;
        r.text = ocr_text();
        r.orientation = coin() ? Orientation::AsCaptured : Orientation::MirrorNormalized;
        r.confidence = real(0.0, 1.0);
        return r;
    }

    std::vector<OcrReading> readings(std::size_t max_n)
    {
        std::vector<OcrReading> out(uniform(0, max_n));
        for (auto& r : out) {
            r = reading();
        }
        return out;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

struct RandomEpoch {
    IntersectionSnapshot snapshot;
    LaneId current_green = 0;
    Duration green_elapsed{0};
};

/// Random but well-formed decide() input: counts 0..200 over random geometry,
/// EV totals 0..5, timers up to 300 s and occasional stale lanes.
inline RandomEpoch random_epoch(Gen& g, const ControllerConfig& config)
{
    RandomEpoch e;
    e.snapshot.epoch = Timestamp{Duration{static_cast<std::int64_t>(g.uniform(0, 4'000'000'000ULL))}};
    const auto lanes = config.lane_ids();
    e.current_green = lanes[g.uniform(0, lanes.size() - 1)];
    e.green_elapsed = Duration{static_cast<std::int64_t>(g.uniform(0, 300'000'000))};
    for (LaneId id : lanes) {
        LaneState s;
        s.lane_id = id;
        const LaneGeometry geometry{g.real(2.0, 30.0), g.real(5.0, 120.0)};
        s.index = compute_index(static_cast<std::uint32_t>(g.uniform(0, 200)), geometry);
        const auto ev_total = static_cast<std::uint32_t>(g.coin(0.3) ? g.uniform(0, 5) : 0);
        s.ev.ambulance_count = static_cast<std::uint32_t>(g.uniform(0, ev_total));
        s.ev.fire_count = ev_total - s.ev.ambulance_count;
        s.red_elapsed = id == e.current_green
                            ? Duration::zero()
                            : Duration{static_cast<std::int64_t>(g.uniform(0, 300'000'000))};
        s.last_frame_at = e.snapshot.epoch;
        s.stale = g.coin(0.1);
        e.snapshot.lanes.push_back(s);
    }
    return e;
}

} // namespace edgesignal::testkit
