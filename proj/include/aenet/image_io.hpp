#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aenet/image.hpp"

namespace aenet {

/// Reads a PNG or baseline TIFF (sniffed by signature) as 8-bit RGB.
ImageU8 read_image(const std::string& path);

void write_png_rgb8(const std::string& path, const ImageU8& image);
void write_png_gray8(const std::string& path, const std::vector<std::uint8_t>& pixels, int h,
                     int w);
void write_png_gray16(const std::string& path, const std::vector<std::uint16_t>& pixels, int h,
                      int w);
std::vector<std::uint16_t> read_png_gray16(const std::string& path, int& h, int& w);

/// Display convention for emitted masks: cell = 255, background = 0.
void write_mask_png(const std::string& path, const Mask& mask);
Mask read_mask_png(const std::string& path);

}  // namespace aenet
