#include "edgesignal/emergency.hpp"
#include "edgesignal/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace edgesignal {

namespace {

std::string to_upper(std::string_view text)
{
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

bool contains_any(const std::string& haystack, const std::vector<std::string>& needles)
{
    return std::any_of(needles.begin(), needles.end(), [&](const std::string& needle) {
        return haystack.find(needle) != std::string::npos;
    });
}

void validate_keywords(const std::vector<std::string>& words, const char* which)
{
    for (const auto& word : words) {
        const bool bad = word.empty() ||
                         std::any_of(word.begin(), word.end(), [](unsigned char c) {
                             return std::isspace(c) || std::islower(c);
                         });
        if (bad) {
            throw ConfigError(std::string(which) + " keyword '" + word +
                              "' must be non-empty uppercase without whitespace");
        }
    }
}

} // namespace

std::string_view to_string(Orientation orientation)
{
    return orientation == Orientation::AsCaptured ? "AsCaptured" : "MirrorNormalized";
}

Orientation orientation_from_string(std::string_view name)
{
    if (name == "AsCaptured") return Orientation::AsCaptured;
    if (name == "MirrorNormalized") return Orientation::MirrorNormalized;
    throw InputError("unknown OCR orientation '" + std::string(name) + "'");
}

void OcrReading::validate() const
{
    if (text.empty()) {
        throw InputError("OCR reading text must not be empty");
    }
    if (!std::isfinite(confidence) || confidence < 0.0 || confidence > 1.0) {
        throw InputError("OCR confidence must lie in [0, 1]");
    }
}

void EvKeywordSet::validate() const
{
    validate_keywords(ambulance, "ambulance");
    validate_keywords(fire, "fire");
}

std::string normalize_mirror(std::string_view text)
{
    return std::string(text.rbegin(), text.rend());
}

EvDetection detect_emergency(std::span<const OcrReading> readings,
                             const EvKeywordSet& keywords,
                             double min_confidence)
{
    EvDetection detection;
    for (const auto& reading : readings) {
        if (reading.confidence < min_confidence) {
            continue;
        }
        const std::string upper = to_upper(reading.text);
        const std::string mirrored = normalize_mirror(upper);
        // Ambulance lettering is matched on the mirror-normalized text, fire
        // lettering on the text as captured.
        const std::string& normalized =
            reading.orientation == Orientation::AsCaptured ? mirrored : upper;
        const std::string& as_captured =
            reading.orientation == Orientation::AsCaptured ? upper : mirrored;

        if (contains_any(normalized, keywords.ambulance)) {
            ++detection.ambulance_count;
        } else if (contains_any(as_captured, keywords.fire)) {
            ++detection.fire_count;
        }
    }
    return detection;
}

} // namespace edgesignal
