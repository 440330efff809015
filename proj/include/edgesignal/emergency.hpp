#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace edgesignal {

/// Whether the OCR stage read the image as captured or after mirroring it.
enum class Orientation { AsCaptured, MirrorNormalized };

std::string_view to_string(Orientation orientation);
Orientation orientation_from_string(std::string_view name);

/// One token stream read by the external OCR stage.
struct OcrReading {
    std::string text;
    Orientation orientation = Orientation::AsCaptured;
    double confidence = 1.0;

    /// Throws InputError on empty text or confidence outside [0, 1].
    void validate() const;

    friend bool operator==(const OcrReading&, const OcrReading&) = default;
};

struct EvKeywordSet {
    std::vector<std::string> ambulance{"AMBULANCE"};
    std::vector<std::string> fire{"FIRE"};

    /// Keywords must be non-empty, uppercase and free of whitespace.
    void validate() const;

    friend bool operator==(const EvKeywordSet&, const EvKeywordSet&) = default;
};

/// Emergency vehicles counted in one lane.
struct EvDetection {
    std::uint32_t ambulance_count = 0;
    std::uint32_t fire_count = 0;

    std::uint32_t total() const { return ambulance_count + fire_count; }

    EvDetection& operator+=(const EvDetection& other)
    {
        ambulance_count += other.ambulance_count;
        fire_count += other.fire_count;
        return *this;
    }

    friend bool operator==(const EvDetection&, const EvDetection&) = default;
};

/// Reverses character order. Glyph shapes are left to the OCR engine, so this
/// is the text-level half of undoing a mirror image. ASCII only.
std::string normalize_mirror(std::string_view text);

/// Counts ambulances and fire vehicles across readings. Each reading that
/// clears `min_confidence` contributes at most one vehicle: an ambulance when
/// an ambulance keyword appears in the mirror-normalized text, otherwise a fire
/// vehicle when a fire keyword appears in the text as captured. Matching is
/// case-insensitive and by contiguous substring.
EvDetection detect_emergency(std::span<const OcrReading> readings,
                             const EvKeywordSet& keywords,
                             double min_confidence);

} // namespace edgesignal
