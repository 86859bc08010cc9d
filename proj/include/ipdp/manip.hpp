#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ipdp/patch.hpp"

namespace ipdp {

enum class ManipKind : uint8_t {
  kOriginal = 0,
  kGaussianBlur,
  kMedianFilter,
  kResample,
  kAwgn,
  kGamma,
};

const char* manip_kind_name(ManipKind k);
ManipKind manip_kind_from_name(const std::string& name);
std::vector<ManipKind> all_manip_kinds();

// Tagged description of one editing operation. Parameters follow the
// defaults used throughout: blur 5x5 sigma 1.1, median 5x5, resample 1.5
// bilinear, AWGN sigma 2, gamma 1.5.
struct ManipulationSpec {
  ManipKind kind = ManipKind::kOriginal;
  int kernel_size = 5;
  double sigma = 0.0;
  double scale_factor = 0.0;
  double gamma = 0.0;
  uint64_t rng_seed = 0;  // AWGN only

  static ManipulationSpec original();
  static ManipulationSpec gaussian_blur(double sigma = 1.1, int kernel_size = 5);
  static ManipulationSpec median_filter(int kernel_size = 5);
  static ManipulationSpec resample(double scale_factor = 1.5);
  static ManipulationSpec awgn(double sigma = 2.0, uint64_t rng_seed = 0);
  static ManipulationSpec gamma_correct(double gamma = 1.5);

  // The default parametrization for a given class.
  static ManipulationSpec defaults_for(ManipKind kind);

  void validate() const;
  bool operator==(const ManipulationSpec&) const = default;
};

// The editing operations. All are pure, size-preserving, and bit-exact
// reproducible; AWGN additionally takes an explicit seed.
Patch gaussian_blur(const Patch& patch, double sigma, int kernel_size);
Patch median_filter(const Patch& patch, int kernel_size);
Patch resample(const Patch& patch, double scale_factor);
Patch awgn(const Patch& patch, double sigma, uint64_t rng_seed);
Patch gamma_correct(const Patch& patch, double gamma);
Patch apply(const ManipulationSpec& spec, const Patch& patch);

// Serial reference kernels, kept for testing the parallel versions and as
// independent oracles (the median reference sorts every window outright).
namespace ref {
void gaussian_blur(const Patch& in, double sigma, int kernel_size, Patch& out);
void median_filter(const Patch& in, int kernel_size, Patch& out);
void resample_bilinear(const Patch& in, double scale_factor, Patch& out);
void awgn(const Patch& in, double sigma, uint64_t rng_seed, Patch& out);
void gamma_correct(const Patch& in, double gamma, Patch& out);
}  // namespace ref

// OpenMP kernels used by the pipeline. Identical results to ref:: bit for
// bit: every output pixel is computed independently with the same
// per-pixel arithmetic.
namespace par {
void gaussian_blur(const Patch& in, double sigma, int kernel_size, Patch& out);
void median_filter(const Patch& in, int kernel_size, Patch& out);
void resample_bilinear(const Patch& in, double scale_factor, Patch& out);
void awgn(const Patch& in, double sigma, uint64_t rng_seed, Patch& out);
void gamma_correct(const Patch& in, double gamma, Patch& out);
}  // namespace par

// Sampled 2-D Gaussian kernel, normalized to sum 1 (row-major, size k*k).
std::vector<double> gaussian_kernel(double sigma, int kernel_size);

}  // namespace ipdp
