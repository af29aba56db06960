#pragma once

#include <string>

#include "ulgfbp/image.hpp"

namespace ulgfbp {

// Decodes a PNG or baseline JPEG file; color inputs are reduced with the
// Rec. 601 grayscale conversion. Throws DataError on undecodable input.
GrayImage decode_image_gray(const std::string& path);

void write_png_gray(const std::string& path, const GrayImage& img);
void write_png_rgb(const std::string& path, const RgbImage& img);

} // namespace ulgfbp
