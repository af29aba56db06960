#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ulgfbp/image.hpp"

namespace ulgfbp {

// Circular neighborhood geometry. SP = 4 * (2R); only R = 1 (the immediate
// 8-pixel ring, no interpolated sampling) is supported.
struct LbpConfig {
    int radius = 1;
    int sampling_points = 8;

    void validate() const;
};

// One SP-bit threshold pattern. Bit ep = 1 iff neighbor(ep) - center >= 0,
// neighbors read clockwise starting at the top; ep = 0 is the most
// significant bit.
struct Pattern {
    std::uint8_t bits = 0;
};

// Number of circular 0<->1 transitions in the bit string. Even, in [0, 8].
int uniformity(Pattern p);

// 59-label coding: uniform patterns (uniformity <= 2) ranked by numeric
// value into 0..57, everything else 58.
int u2_label(Pattern p);

// Rotation-invariant coding: popcount for uniform patterns, SP + 1 = 9
// otherwise. 10 labels total.
int riu2_label(Pattern p);

constexpr int kU2Bins = 59;
constexpr int kRiu2Bins = 10;
constexpr int kNonUniformU2Label = 58;

enum class LbpMode { U2, Riu2 };

int label_count(LbpMode mode);

// Precomputed 256-entry pattern -> label maps.
struct UlbpTables {
    std::array<std::uint8_t, 256> u2;
    std::array<std::uint8_t, 256> riu2;
    std::array<std::uint8_t, 256> transitions;
};

UlbpTables build_ulbp_tables();
const UlbpTables& ulbp_tables(); // built once, immutable

Pattern lbp_pattern(const FloatImage& img, int x, int y, const LbpConfig& cfg);

// Coded labels for interior pixels; a border of width R is excluded, so the
// output is 2R smaller than the source per axis.
struct LabelImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> labels;

    std::uint8_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

LabelImage code_image(const FloatImage& img, const LbpConfig& cfg, LbpMode mode);

// 3x3 grid of per-region L1-normalized label histograms, row-major. Regions
// of an indivisible image differ by at most one pixel per axis, earlier
// rows/columns take the extra pixel.
struct RegionHistogramSet {
    int bins = 0;
    std::array<std::vector<double>, 9> histograms;
};

RegionHistogramSet region_histograms(const LabelImage& li, int bins);

} // namespace ulgfbp
