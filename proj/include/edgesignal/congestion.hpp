#pragma once

#include <cstdint>
#include <string_view>

namespace edgesignal {

/// Monitored stretch of one approach. Width and camera coverage length are in
/// meters, so indices come out in vehicles per square meter.
struct LaneGeometry {
    double width_m = 10.0;
    double coverage_length_m = 10.0;

    /// Throws ConfigError unless both dimensions are finite and positive.
    void validate() const;
    double area() const { return width_m * coverage_length_m; }

    friend bool operator==(const LaneGeometry&, const LaneGeometry&) = default;
};

/// Vehicles per unit of monitored road area. Never negative; zero only for an
/// empty lane.
struct CongestionIndex {
    double value = 0.0;

    friend bool operator==(const CongestionIndex&, const CongestionIndex&) = default;
};

/// Band edges. The middle level is the open interval (c1, c3) and is not stored.
struct Thresholds {
    double c1 = 0.10;
    double c3 = 0.25;

    void validate() const;

    friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

enum class CongestionBand { Low, Mid, High };

std::string_view to_string(CongestionBand band);
CongestionBand band_from_string(std::string_view name);

/// count / (width * coverage_length). Geometry is assumed valid; it is checked
/// when configuration loads.
CongestionIndex compute_index(std::uint32_t vehicle_count, const LaneGeometry& geometry);

/// Low for index <= c1, High for index >= c3, Mid strictly between. Values are
/// compared after rounding to nine decimal places.
CongestionBand classify(CongestionIndex index, const Thresholds& thresholds);

/// Fixed-point key used for every index comparison (banding and argmax).
std::int64_t comparison_key(double index_value);

} // namespace edgesignal
