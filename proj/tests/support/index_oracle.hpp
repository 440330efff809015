#pragma once

// Test-only reference for the congestion index: exact integer long division on
// geometry expressed in millimeters, independent of the floating-point path.

#include <cstdint>
#include <cstdlib>
#include <string>

namespace edgesignal::testkit {

/// count / (width_mm/1000 * length_mm/1000) evaluated digit by digit to
/// `digits` places after the point, then parsed once.
inline double long_division_index(std::uint64_t count, std::uint64_t width_mm,
                                  std::uint64_t length_mm, int digits = 24)
{
    const std::uint64_t numerator_scale = 1'000'000; // mm^2 per m^2
    unsigned __int128 numerator = static_cast<unsigned __int128>(count) * numerator_scale;
    const unsigned __int128 denominator = static_cast<unsigned __int128>(width_mm) * length_mm;

    unsigned __int128 whole = numerator / denominator;
    unsigned __int128 remainder = numerator % denominator;

    std::string text;
    if (whole == 0) {
        text = "0";
    }
    while (whole > 0) {
        text.insert(text.begin(), static_cast<char>('0' + static_cast<int>(whole % 10)));
        whole /= 10;
    }
    text += '.';
    for (int i = 0; i < digits; ++i) {
        remainder *= 10;
        text += static_cast<char>('0' + static_cast<int>(remainder / denominator));
        remainder %= denominator;
    }
    return std::strtod(text.c_str(), nullptr);
}

} // namespace edgesignal::testkit
