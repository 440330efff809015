#include "edgesignal/sim/rng.hpp"

namespace edgesignal::sim {

std::uint64_t splitmix64(std::uint64_t& state)
{
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream_id)
{
    std::uint64_t state = master ^ (stream_id * 0x9E3779B97F4A7C15ULL);
    return splitmix64(state);
}

} // namespace edgesignal::sim
