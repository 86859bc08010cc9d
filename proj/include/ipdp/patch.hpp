#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ipdp/error.hpp"

namespace ipdp {

// 8-bit grayscale raster, row-major. Used both for full source images and
// for the square tiles the pipeline operates on.
struct Gray8 {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> pixels;

  Gray8() = default;
  Gray8(int h, int w, uint8_t fill = 0)
      : height(h), width(w), pixels(static_cast<size_t>(h) * w, fill) {}

  uint8_t at(int r, int c) const { return pixels[static_cast<size_t>(r) * width + c]; }
  uint8_t& at(int r, int c) { return pixels[static_cast<size_t>(r) * width + c]; }
  size_t size() const { return pixels.size(); }
  bool empty() const { return pixels.empty(); }

  bool operator==(const Gray8& o) const {
    return height == o.height && width == o.width && pixels == o.pixels;
  }
};

using Patch = Gray8;

struct SourceImage {
  std::string id;
  Gray8 pixels;
  std::string origin_path;
};

// Quantization used after every float-valued operation: round half away
// from zero, clamp to [0,255]. Oracles rely on this exact convention.
inline uint8_t quantize_u8(double v) {
  const long r = std::lround(v);
  if (r < 0) return 0;
  if (r > 255) return 255;
  return static_cast<uint8_t>(r);
}

}  // namespace ipdp
