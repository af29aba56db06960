#pragma once

#include "ulgfbp/image.hpp"

namespace ulgfbp {

// Rec. 601 luma: round(0.299 R + 0.587 G + 0.114 B), clamped to [0, 255].
GrayImage to_grayscale(const RgbImage& rgb);

// Bilinear resampling with pixel-center alignment and edge clamping.
// Output values never leave [min(input), max(input)].
GrayImage resize_bilinear(const GrayImage& img, int w, int h);
FloatImage resize_bilinear(const FloatImage& img, int w, int h);

// out(v) = floor(255 * cdf(v)) over the empirical intensity distribution.
// Monotone non-decreasing in the input intensity.
GrayImage equalize_histogram(const GrayImage& img);

// (in - mean) / std with population std; all zeros when std < 1e-12.
FloatImage normalize_zscore(const GrayImage& img);

// Lossless right-angle rotation, quarter_turns in {0,1,2,3} counted clockwise.
GrayImage rotate_quarter(const GrayImage& img, int quarter_turns);

} // namespace ulgfbp
