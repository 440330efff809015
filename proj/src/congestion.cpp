#include "edgesignal/congestion.hpp"
#include "edgesignal/errors.hpp"

#include <cmath>
#include <string>

namespace edgesignal {

namespace {

constexpr double kComparisonScale = 1e9;

} // namespace

void LaneGeometry::validate() const
{
    if (!std::isfinite(width_m) || width_m <= 0.0) {
        throw ConfigError("lane width must be positive, got " + std::to_string(width_m));
    }
    if (!std::isfinite(coverage_length_m) || coverage_length_m <= 0.0) {
        throw ConfigError("lane coverage length must be positive, got " +
                          std::to_string(coverage_length_m));
    }
}

void Thresholds::validate() const
{
    if (!std::isfinite(c1) || !std::isfinite(c3) || !(c1 > 0.0) || !(c1 < c3)) {
        throw ConfigError("thresholds require 0 < c1 < c3, got c1=" + std::to_string(c1) +
                          " c3=" + std::to_string(c3));
    }
}

std::string_view to_string(CongestionBand band)
{
    switch (band) {
    case CongestionBand::Low:
        return "Low";
    case CongestionBand::Mid:
        return "Mid";
    case CongestionBand::High:
        return "High";
    }
    return "?";
}

CongestionBand band_from_string(std::string_view name)
{
    if (name == "Low") return CongestionBand::Low;
    if (name == "Mid") return CongestionBand::Mid;
    if (name == "High") return CongestionBand::High;
    throw InputError("unknown congestion band '" + std::string(name) + "'");
}

CongestionIndex compute_index(std::uint32_t vehicle_count, const LaneGeometry& geometry)
{
    return CongestionIndex{static_cast<double>(vehicle_count) / geometry.area()};
}

std::int64_t comparison_key(double index_value)
{
    return std::llround(index_value * kComparisonScale);
}

CongestionBand classify(CongestionIndex index, const Thresholds& thresholds)
{
    const auto value = comparison_key(index.value);
    if (value <= comparison_key(thresholds.c1)) {
        return CongestionBand::Low;
    }
    if (value >= comparison_key(thresholds.c3)) {
        return CongestionBand::High;
    }
    return CongestionBand::Mid;
}

} // namespace edgesignal
