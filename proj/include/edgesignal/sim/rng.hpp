#pragma once

#include <cstdint>
#include <random>

namespace edgesignal::sim {

/// One SplitMix64 step; used only to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for stream `stream_id` under a master seed: the first SplitMix64
/// output after seeding with master ^ (stream_id * 0x9E3779B97F4A7C15).
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream_id);

/// std::mt19937_64 with distributions written out by hand, so a given seed
/// yields the same draws on every standard library.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Top 53 bits scaled into [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 engine_;
};

} // namespace edgesignal::sim
