#pragma once

#include <string>

#include "ipdp/patch.hpp"

namespace ipdp {

// Decode any readable image; color inputs contribute only their green
// channel, grayscale inputs pass through.
Gray8 load_green_channel(const std::string& path);

// Lossless 8-bit grayscale PNG store.
void save_png(const Gray8& img, const std::string& path);
Gray8 load_png_gray(const std::string& path);

// Encode/decode through JPEG at the given quality (1..100), in memory.
Gray8 jpeg_roundtrip(const Gray8& img, int quality);

double psnr(const Gray8& a, const Gray8& b);

}  // namespace ipdp
