#include "ipdp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "ipdp/image_io.hpp"
#include "ipdp/rng.hpp"

namespace ipdp {

namespace {

// Bilinear upsample of a coarse unit grid onto the full frame.
void add_octave(std::vector<double>& img, int h, int w, int cell, double amplitude, Rng& rng) {
  const int gh = h / cell + 2, gw = w / cell + 2;
  std::vector<double> grid(static_cast<size_t>(gh) * gw);
  for (auto& g : grid) g = rng.normal();
  for (int r = 0; r < h; ++r) {
    const double gy = static_cast<double>(r) / cell;
    const int y0 = static_cast<int>(gy);
    const double fy = gy - y0;
    for (int c = 0; c < w; ++c) {
      const double gx = static_cast<double>(c) / cell;
      const int x0 = static_cast<int>(gx);
      const double fx = gx - x0;
      const double v00 = grid[static_cast<size_t>(y0) * gw + x0];
      const double v01 = grid[static_cast<size_t>(y0) * gw + x0 + 1];
      const double v10 = grid[static_cast<size_t>(y0 + 1) * gw + x0];
      const double v11 = grid[static_cast<size_t>(y0 + 1) * gw + x0 + 1];
      const double v = (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
      img[static_cast<size_t>(r) * w + c] += amplitude * v;
    }
  }
}

}  // namespace

Gray8 make_synthetic_source(uint64_t seed, int height, int width) {
  Rng rng(seed);
  std::vector<double> img(static_cast<size_t>(height) * width, 128.0);

  // diagonal luminance ramp with random orientation and swing
  const double angle = rng.uniform(0.0, kTwoPi);
  const double swing = rng.uniform(30.0, 70.0);
  const double cy = std::sin(angle), cx = std::cos(angle);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const double t = (cy * r / height + cx * c / width);
      img[static_cast<size_t>(r) * width + c] += swing * t;
    }

  add_octave(img, height, width, 128, 26.0, rng);
  add_octave(img, height, width, 32, 14.0, rng);
  add_octave(img, height, width, 8, 7.0, rng);

  // fine grain, akin to sensor noise
  const uint64_t grain_seed = rng.next_u64();
  for (size_t i = 0; i < img.size(); ++i) img[i] += 2.5 * counter_normal(grain_seed, i);

  Gray8 out(height, width);
  for (size_t i = 0; i < img.size(); ++i) out.pixels[i] = quantize_u8(img[i]);
  return out;
}

void write_demo_sources(const std::string& dir, int count, uint64_t seed, int height, int width) {
  std::filesystem::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    const Gray8 img = make_synthetic_source(splitmix64(seed + static_cast<uint64_t>(i)), height,
                                            width);
    save_png(img, (std::filesystem::path(dir) / ("src_" + std::to_string(i) + ".png")).string());
  }
}

}  // namespace ipdp
