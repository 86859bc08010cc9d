#include "ipdp/manip.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ipdp/rng.hpp"

namespace ipdp {

const char* manip_kind_name(ManipKind k) {
  switch (k) {
    case ManipKind::kOriginal: return "original";
    case ManipKind::kGaussianBlur: return "gaussian_blur";
    case ManipKind::kMedianFilter: return "median_filter";
    case ManipKind::kResample: return "resample";
    case ManipKind::kAwgn: return "awgn";
    case ManipKind::kGamma: return "gamma";
  }
  throw ParamError("unknown manipulation kind");
}

ManipKind manip_kind_from_name(const std::string& name) {
  for (ManipKind k : all_manip_kinds()) {
    if (name == manip_kind_name(k)) return k;
  }
  throw ParamError("unknown manipulation class '" + name +
                   "' (valid: original, gaussian_blur, median_filter, resample, awgn, gamma)");
}

std::vector<ManipKind> all_manip_kinds() {
  return {ManipKind::kOriginal,  ManipKind::kGaussianBlur, ManipKind::kMedianFilter,
          ManipKind::kResample,  ManipKind::kAwgn,         ManipKind::kGamma};
}

ManipulationSpec ManipulationSpec::original() {
  ManipulationSpec s;
  s.kind = ManipKind::kOriginal;
  return s;
}
ManipulationSpec ManipulationSpec::gaussian_blur(double sigma, int kernel_size) {
  ManipulationSpec s;
  s.kind = ManipKind::kGaussianBlur;
  s.sigma = sigma;
  s.kernel_size = kernel_size;
  return s;
}
ManipulationSpec ManipulationSpec::median_filter(int kernel_size) {
  ManipulationSpec s;
  s.kind = ManipKind::kMedianFilter;
  s.kernel_size = kernel_size;
  return s;
}
ManipulationSpec ManipulationSpec::resample(double scale_factor) {
  ManipulationSpec s;
  s.kind = ManipKind::kResample;
  s.scale_factor = scale_factor;
  return s;
}
ManipulationSpec ManipulationSpec::awgn(double sigma, uint64_t rng_seed) {
  ManipulationSpec s;
  s.kind = ManipKind::kAwgn;
  s.sigma = sigma;
  s.rng_seed = rng_seed;
  return s;
}
ManipulationSpec ManipulationSpec::gamma_correct(double gamma) {
  ManipulationSpec s;
  s.kind = ManipKind::kGamma;
  s.gamma = gamma;
  return s;
}

ManipulationSpec ManipulationSpec::defaults_for(ManipKind kind) {
  switch (kind) {
    case ManipKind::kOriginal: return original();
    case ManipKind::kGaussianBlur: return gaussian_blur();
    case ManipKind::kMedianFilter: return median_filter();
    case ManipKind::kResample: return resample();
    case ManipKind::kAwgn: return awgn();
    case ManipKind::kGamma: return gamma_correct();
  }
  throw ParamError("unknown manipulation kind");
}

void ManipulationSpec::validate() const {
  switch (kind) {
    case ManipKind::kOriginal:
      break;
    case ManipKind::kGaussianBlur:
      require(kernel_size >= 3 && kernel_size % 2 == 1, "blur kernel_size must be odd and >= 3");
      require(sigma > 0.0, "blur sigma must be > 0");
      break;
    case ManipKind::kMedianFilter:
      require(kernel_size >= 3 && kernel_size % 2 == 1, "median kernel_size must be odd and >= 3");
      break;
    case ManipKind::kResample:
      require(scale_factor > 1.0, "resample scale_factor must be > 1");
      break;
    case ManipKind::kAwgn:
      require(sigma > 0.0, "awgn sigma must be > 0");
      break;
    case ManipKind::kGamma:
      require(gamma > 0.0, "gamma must be > 0");
      break;
  }
}

std::vector<double> gaussian_kernel(double sigma, int kernel_size) {
  require(kernel_size % 2 == 1, "kernel_size must be odd");
  require(sigma > 0.0, "sigma must be > 0");
  const int radius = kernel_size / 2;
  std::vector<double> k(static_cast<size_t>(kernel_size) * kernel_size);
  double sum = 0.0;
  for (int l = -radius; l <= radius; ++l) {
    for (int m = -radius; m <= radius; ++m) {
      const double v = std::exp(-(l * l + m * m) / (2.0 * sigma * sigma));
      k[static_cast<size_t>(l + radius) * kernel_size + (m + radius)] = v;
      sum += v;
    }
  }
  for (double& v : k) v /= sum;
  return k;
}

namespace {

inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

// One blurred output pixel; replicate padding at borders.
inline uint8_t blur_pixel(const Patch& in, const std::vector<double>& kernel, int radius, int r,
                          int c) {
  double acc = 0.0;
  const int k = 2 * radius + 1;
  for (int l = -radius; l <= radius; ++l) {
    const int rr = clamp_index(r + l, in.height);
    for (int m = -radius; m <= radius; ++m) {
      const int cc = clamp_index(c + m, in.width);
      acc += kernel[static_cast<size_t>(l + radius) * k + (m + radius)] * in.at(rr, cc);
    }
  }
  return quantize_u8(acc);
}

inline uint8_t gamma_lookup(const std::array<uint8_t, 256>& lut, uint8_t v) { return lut[v]; }

std::array<uint8_t, 256> gamma_lut(double gamma) {
  std::array<uint8_t, 256> lut;
  for (int v = 0; v < 256; ++v) {
    lut[v] = quantize_u8(255.0 * std::pow(v / 255.0, gamma));
  }
  return lut;
}

// Bilinear sample at half-pixel-center source coordinates, replicated
// outside the frame.
inline double bilinear_at(const Patch& in, double sy, double sx) {
  const int y0 = clamp_index(static_cast<int>(std::floor(sy)), in.height);
  const int x0 = clamp_index(static_cast<int>(std::floor(sx)), in.width);
  const int y1 = clamp_index(y0 + 1, in.height);
  const int x1 = clamp_index(x0 + 1, in.width);
  const double fy = sy - std::floor(sy);
  const double fx = sx - std::floor(sx);
  const double top = (1.0 - fx) * in.at(y0, x0) + fx * in.at(y0, x1);
  const double bot = (1.0 - fx) * in.at(y1, x0) + fx * in.at(y1, x1);
  return (1.0 - fy) * top + fy * bot;
}

inline uint8_t resample_pixel(const Patch& in, double scale, int row_off, int col_off, int r,
                              int c) {
  const double sy = (r + row_off + 0.5) / scale - 0.5;
  const double sx = (c + col_off + 0.5) / scale - 0.5;
  const double sy_c = std::max(0.0, std::min(sy, in.height - 1.0));
  const double sx_c = std::max(0.0, std::min(sx, in.width - 1.0));
  return quantize_u8(bilinear_at(in, sy_c, sx_c));
}

inline uint8_t awgn_pixel(const Patch& in, double sigma, uint64_t seed, int r, int c) {
  const uint64_t i = static_cast<uint64_t>(r) * in.width + c;
  return quantize_u8(in.at(r, c) + sigma * counter_normal(seed, i));
}

}  // namespace

// ---------------------------------------------------------------------------
// Serial reference kernels.
// ---------------------------------------------------------------------------
namespace ref {

void gaussian_blur(const Patch& in, double sigma, int kernel_size, Patch& out) {
  const auto kernel = ipdp::gaussian_kernel(sigma, kernel_size);
  const int radius = kernel_size / 2;
  out = Patch(in.height, in.width);
  for (int r = 0; r < in.height; ++r)
    for (int c = 0; c < in.width; ++c) out.at(r, c) = blur_pixel(in, kernel, radius, r, c);
}

// Brute-force oracle: copy each replicate-padded window, sort it, take the
// middle element.
void median_filter(const Patch& in, int kernel_size, Patch& out) {
  const int radius = kernel_size / 2;
  out = Patch(in.height, in.width);
  std::vector<uint8_t> window(static_cast<size_t>(kernel_size) * kernel_size);
  for (int r = 0; r < in.height; ++r) {
    for (int c = 0; c < in.width; ++c) {
      size_t n = 0;
      for (int l = -radius; l <= radius; ++l)
        for (int m = -radius; m <= radius; ++m)
          window[n++] = in.at(clamp_index(r + l, in.height), clamp_index(c + m, in.width));
      std::sort(window.begin(), window.end());
      out.at(r, c) = window[window.size() / 2];
    }
  }
}

void resample_bilinear(const Patch& in, double scale_factor, Patch& out) {
  const int up_h = static_cast<int>(std::floor(scale_factor * in.height));
  const int up_w = static_cast<int>(std::floor(scale_factor * in.width));
  const int row_off = (up_h - in.height) / 2;
  const int col_off = (up_w - in.width) / 2;
  out = Patch(in.height, in.width);
  for (int r = 0; r < in.height; ++r)
    for (int c = 0; c < in.width; ++c)
      out.at(r, c) = resample_pixel(in, scale_factor, row_off, col_off, r, c);
}

void awgn(const Patch& in, double sigma, uint64_t rng_seed, Patch& out) {
  out = Patch(in.height, in.width);
  for (int r = 0; r < in.height; ++r)
    for (int c = 0; c < in.width; ++c) out.at(r, c) = awgn_pixel(in, sigma, rng_seed, r, c);
}

void gamma_correct(const Patch& in, double gamma, Patch& out) {
  const auto lut = gamma_lut(gamma);
  out = Patch(in.height, in.width);
  for (size_t i = 0; i < in.size(); ++i) out.pixels[i] = gamma_lookup(lut, in.pixels[i]);
}

}  // namespace ref

// ---------------------------------------------------------------------------
// OpenMP kernels. Row-parallel; per-pixel arithmetic shared with ref::.
// ---------------------------------------------------------------------------
namespace par {

void gaussian_blur(const Patch& in, double sigma, int kernel_size, Patch& out) {
  const auto kernel = ipdp::gaussian_kernel(sigma, kernel_size);
  const int radius = kernel_size / 2;
  out = Patch(in.height, in.width);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < in.height; ++r)
    for (int c = 0; c < in.width; ++c) out.at(r, c) = blur_pixel(in, kernel, radius, r, c);
}

void median_filter(const Patch& in, int kernel_size, Patch& out) {
  const int radius = kernel_size / 2;
  out = Patch(in.height, in.width);
#pragma omp parallel
  {
    std::vector<uint8_t> window(static_cast<size_t>(kernel_size) * kernel_size);
#pragma omp for schedule(static)
    for (int r = 0; r < in.height; ++r) {
      for (int c = 0; c < in.width; ++c) {
        size_t n = 0;
        for (int l = -radius; l <= radius; ++l)
          for (int m = -radius; m <= radius; ++m)
            window[n++] = in.at(clamp_index(r + l, in.height), clamp_index(c + m, in.width));
        auto mid = window.begin() + window.size() / 2;
        std::nth_element(window.begin(), mid, window.end());
        out.at(r, c) = *mid;
      }
    }
  }
}

void resample_bilinear(const Patch& in, double scale_factor, Patch& out) {
  const int up_h = static_cast<int>(std::floor(scale_factor * in.height));
  const int up_w = static_cast<int>(std::floor(scale_factor * in.width));
  const int row_off = (up_h - in.height) / 2;
  const int col_off = (up_w - in.width) / 2;
  out = Patch(in.height, in.width);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < in.height; ++r)
    for (int c = 0; c < in.width; ++c)
      out.at(r, c) = resample_pixel(in, scale_factor, row_off, col_off, r, c);
}

void awgn(const Patch& in, double sigma, uint64_t rng_seed, Patch& out) {
  out = Patch(in.height, in.width);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < in.height; ++r)
    for (int c = 0; c < in.width; ++c) out.at(r, c) = awgn_pixel(in, sigma, rng_seed, r, c);
}

void gamma_correct(const Patch& in, double gamma, Patch& out) {
  const auto lut = gamma_lut(gamma);
  out = Patch(in.height, in.width);
  const int64_t n = static_cast<int64_t>(in.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) out.pixels[i] = gamma_lookup(lut, in.pixels[i]);
}

}  // namespace par

// ---------------------------------------------------------------------------
// Public operations: validate, then run the parallel kernel.
// ---------------------------------------------------------------------------

Patch gaussian_blur(const Patch& patch, double sigma, int kernel_size) {
  require(!patch.empty(), "patch must be nonempty");
  require(kernel_size >= 3 && kernel_size % 2 == 1, "kernel_size must be odd and >= 3");
  require(sigma > 0.0, "sigma must be > 0");
  Patch out;
  par::gaussian_blur(patch, sigma, kernel_size, out);
  return out;
}

Patch median_filter(const Patch& patch, int kernel_size) {
  require(!patch.empty(), "patch must be nonempty");
  require(kernel_size >= 3 && kernel_size % 2 == 1, "kernel_size must be odd and >= 3");
  require(patch.height >= kernel_size && patch.width >= kernel_size,
          "patch must be at least kernel_size in both dimensions");
  Patch out;
  par::median_filter(patch, kernel_size, out);
  return out;
}

Patch resample(const Patch& patch, double scale_factor) {
  require(!patch.empty(), "patch must be nonempty");
  require(scale_factor > 1.0, "scale_factor must be > 1");
  Patch out;
  par::resample_bilinear(patch, scale_factor, out);
  return out;
}

Patch awgn(const Patch& patch, double sigma, uint64_t rng_seed) {
  require(!patch.empty(), "patch must be nonempty");
  require(sigma > 0.0, "sigma must be > 0");
  Patch out;
  par::awgn(patch, sigma, rng_seed, out);
  return out;
}

Patch gamma_correct(const Patch& patch, double gamma) {
  require(!patch.empty(), "patch must be nonempty");
  require(gamma > 0.0, "gamma must be > 0");
  Patch out;
  par::gamma_correct(patch, gamma, out);
  return out;
}

Patch apply(const ManipulationSpec& spec, const Patch& patch) {
  spec.validate();
  switch (spec.kind) {
    case ManipKind::kOriginal: return patch;
    case ManipKind::kGaussianBlur: return gaussian_blur(patch, spec.sigma, spec.kernel_size);
    case ManipKind::kMedianFilter: return median_filter(patch, spec.kernel_size);
    case ManipKind::kResample: return resample(patch, spec.scale_factor);
    case ManipKind::kAwgn: return awgn(patch, spec.sigma, spec.rng_seed);
    case ManipKind::kGamma: return gamma_correct(patch, spec.gamma);
  }
  throw ParamError("unknown manipulation kind");
}

}  // namespace ipdp
