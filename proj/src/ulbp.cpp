#include "ulgfbp/ulbp.hpp"

#include <bit>

#include "ulgfbp/errors.hpp"

namespace ulgfbp {

void LbpConfig::validate() const {
    if (radius != 1) throw ArgumentError("LbpConfig: only radius 1 is supported");
    if (sampling_points != 4 * (2 * radius))
        throw ArgumentError("LbpConfig: sampling points must equal 4 * (2 * radius)");
}

namespace {

int count_transitions(std::uint8_t bits) {
    // Circular adjacent-pair differences: (b7,b6),...,(b1,b0) plus wrap (b0,b7).
    int t = 0;
    for (int i = 0; i < 7; ++i) t += ((bits >> i) & 1u) != ((bits >> (i + 1)) & 1u);
    t += (bits & 1u) != ((bits >> 7) & 1u);
    return t;
}

} // namespace

UlbpTables build_ulbp_tables() {
    UlbpTables t{};
    int next_uniform_rank = 0;
    for (int p = 0; p < 256; ++p) {
        const auto bits = static_cast<std::uint8_t>(p);
        const int u = count_transitions(bits);
        t.transitions[p] = static_cast<std::uint8_t>(u);
        if (u <= 2) {
            t.u2[p] = static_cast<std::uint8_t>(next_uniform_rank++);
            t.riu2[p] = static_cast<std::uint8_t>(std::popcount(bits));
        } else {
            t.u2[p] = kNonUniformU2Label;
            t.riu2[p] = 9; // SP + 1
        }
    }
    return t;
}

const UlbpTables& ulbp_tables() {
    static const UlbpTables tables = build_ulbp_tables();
    return tables;
}

int uniformity(Pattern p) { return ulbp_tables().transitions[p.bits]; }

int u2_label(Pattern p) { return ulbp_tables().u2[p.bits]; }

int riu2_label(Pattern p) { return ulbp_tables().riu2[p.bits]; }

int label_count(LbpMode mode) { return mode == LbpMode::U2 ? kU2Bins : kRiu2Bins; }

namespace {

// Clockwise ring around the center starting at the top, (dx, dy) with y down.
constexpr int kRingDx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr int kRingDy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

inline std::uint8_t pattern_at(const double* row_above, const double* row, const double* row_below, int x) {
    const double c = row[x];
    std::uint8_t bits = 0;
    bits |= static_cast<std::uint8_t>(row_above[x] >= c) << 7;     // top
    bits |= static_cast<std::uint8_t>(row_above[x + 1] >= c) << 6; // top-right
    bits |= static_cast<std::uint8_t>(row[x + 1] >= c) << 5;       // right
    bits |= static_cast<std::uint8_t>(row_below[x + 1] >= c) << 4; // bottom-right
    bits |= static_cast<std::uint8_t>(row_below[x] >= c) << 3;     // bottom
    bits |= static_cast<std::uint8_t>(row_below[x - 1] >= c) << 2; // bottom-left
    bits |= static_cast<std::uint8_t>(row[x - 1] >= c) << 1;       // left
    bits |= static_cast<std::uint8_t>(row_above[x - 1] >= c) << 0; // top-left
    return bits;
}

} // namespace

Pattern lbp_pattern(const FloatImage& img, int x, int y, const LbpConfig& cfg) {
    cfg.validate();
    const int r = cfg.radius;
    if (x < r || y < r || x >= img.width - r || y >= img.height - r)
        throw ArgumentError("lbp_pattern: pixel closer than radius to the border");
    const double c = img.at(x, y);
    std::uint8_t bits = 0;
    for (int ep = 0; ep < 8; ++ep) {
        const double v = img.at(x + kRingDx[ep] * r, y + kRingDy[ep] * r);
        bits |= static_cast<std::uint8_t>(v - c >= 0.0) << (7 - ep);
    }
    return Pattern{bits};
}

LabelImage code_image(const FloatImage& img, const LbpConfig& cfg, LbpMode mode) {
    cfg.validate();
    const int r = cfg.radius;
    if (img.width <= 2 * r || img.height <= 2 * r)
        throw DimensionError("code_image: image must exceed 2R per axis");
    const auto& tables = ulbp_tables();
    const auto& lut = mode == LbpMode::U2 ? tables.u2 : tables.riu2;

    LabelImage out;
    out.width = img.width - 2 * r;
    out.height = img.height - 2 * r;
    out.labels.resize(static_cast<std::size_t>(out.width) * out.height);

    for (int y = r; y < img.height - r; ++y) {
        const double* row_above = img.data.data() + static_cast<std::size_t>(y - 1) * img.width;
        const double* row = row_above + img.width;
        const double* row_below = row + img.width;
        std::uint8_t* dst = out.labels.data() + static_cast<std::size_t>(y - r) * out.width;
        for (int x = r; x < img.width - r; ++x) dst[x - r] = lut[pattern_at(row_above, row, row_below, x)];
    }
    return out;
}

RegionHistogramSet region_histograms(const LabelImage& li, int bins) {
    if (li.width < 3 || li.height < 3)
        throw DimensionError("region_histograms: label image must be at least 3x3");
    if (bins < 1) throw ArgumentError("region_histograms: bins must be >= 1");

    RegionHistogramSet out;
    out.bins = bins;

    // Earlier rows/columns receive the remainder pixels.
    auto split = [](int extent, int parts, int index) {
        const int base = extent / parts, rem = extent % parts;
        const int begin = index * base + std::min(index, rem);
        return std::pair<int, int>{begin, begin + base + (index < rem ? 1 : 0)};
    };

    for (int ry = 0; ry < 3; ++ry) {
        const auto [y0, y1] = split(li.height, 3, ry);
        for (int rx = 0; rx < 3; ++rx) {
            const auto [x0, x1] = split(li.width, 3, rx);
            auto& h = out.histograms[ry * 3 + rx];
            h.assign(bins, 0.0);
            std::size_t count = 0;
            for (int y = y0; y < y1; ++y) {
                const std::uint8_t* row = li.labels.data() + static_cast<std::size_t>(y) * li.width;
                for (int x = x0; x < x1; ++x) {
                    if (row[x] >= bins) throw ArgumentError("region_histograms: label exceeds bin count");
                    h[row[x]] += 1.0;
                    ++count;
                }
            }
            if (count > 0)
                for (double& v : h) v /= static_cast<double>(count);
        }
    }
    return out;
}

} // namespace ulgfbp
