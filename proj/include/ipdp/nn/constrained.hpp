#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ipdp/error.hpp"
#include "ipdp/nn/kernels.hpp"
#include "ipdp/nn/tensor.hpp"
#include "ipdp/rng.hpp"

namespace ipdp {

// Prediction-error filter bank. Every filter is held on the constraint
// surface: center weight fixed at -1, remaining weights summing to 1, so
// each response is the difference between a pixel's neighborhood
// prediction and the pixel itself. Enforced by projection after every
// optimizer step.

template <typename T>
int64_t bank_kernel_size(const Tensor<T>& w) {
  const int64_t kk = w.shape[1];
  const auto k = static_cast<int64_t>(std::llround(std::sqrt(static_cast<double>(kk))));
  require(k * k == kk && k % 2 == 1, "bank rows must be odd square kernels");
  return k;
}

constexpr double kDegenerateOffSum = 1e-12;

// Center = -1, off-center normalized to sum 1, in place.
// Normalization runs in double and a residual-repair pass absorbs the
// float rounding of the stored weights, so the off-center sum lands within
// 1e-6 of 1 even in single precision. Throws on a (near) zero off-center
// sum; the trainer catches that and re-randomizes the filter instead.
template <typename T>
void project_bank(Tensor<T>& w) {
  const int64_t K = w.shape[0];
  const int64_t kk = w.shape[1];
  const int64_t center = kk / 2;
  for (int64_t f = 0; f < K; ++f) {
    T* row = w.ptr() + f * kk;
    double off_sum = 0;
    for (int64_t i = 0; i < kk; ++i)
      if (i != center) off_sum += static_cast<double>(row[i]);
    if (std::abs(off_sum) < kDegenerateOffSum)
      throw NumericError("degenerate constrained filter " + std::to_string(f) +
                         ": off-center weights sum to ~0");
    for (int64_t i = 0; i < kk; ++i)
      if (i != center) row[i] = static_cast<T>(static_cast<double>(row[i]) / off_sum);
    // dump the remaining rounding residual into the smallest-magnitude
    // entry, where float resolution is finest
    for (int pass = 0; pass < 8; ++pass) {
      double residual = -1.0;
      int64_t smallest = center == 0 ? 1 : 0;
      for (int64_t i = 0; i < kk; ++i) {
        if (i == center) continue;
        residual += static_cast<double>(row[i]);
        if (std::abs(row[i]) < std::abs(row[smallest])) smallest = i;
      }
      if (std::abs(residual) < 1e-9) break;
      row[smallest] = static_cast<T>(static_cast<double>(row[smallest]) - residual);
    }
    row[center] = T(-1);
  }
}

template <typename T>
void randomize_filter(Tensor<T>& w, int64_t f, Rng& rng, T stddev = static_cast<T>(0.1)) {
  const int64_t kk = w.shape[1];
  const int64_t center = kk / 2;
  T* row = w.ptr() + f * kk;
  for (int64_t i = 0; i < kk; ++i) row[i] = i == center ? T(-1) : static_cast<T>(rng.normal(0.0, stddev));
}

// Projection with the degenerate-filter rescue used during training:
// filters whose off-center sum collapses are re-randomized from `rng` and
// reported through `events`.
template <typename T>
void project_bank_rescue(Tensor<T>& w, Rng& rng, std::vector<std::string>* events = nullptr) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    try {
      project_bank(w);
      return;
    } catch (const NumericError& e) {
      if (events) events->push_back(e.what());
      // find and re-draw every degenerate filter
      const int64_t K = w.shape[0], kk = w.shape[1], center = kk / 2;
      for (int64_t f = 0; f < K; ++f) {
        T off_sum = 0;
        for (int64_t i = 0; i < kk; ++i)
          if (i != center) off_sum += w.ptr()[f * kk + i];
        if (std::abs(static_cast<double>(off_sum)) < kDegenerateOffSum)
          randomize_filter(w, f, rng);
      }
    }
  }
  throw NumericError("constrained projection failed to recover a degenerate filter");
}

// Off-center weights ~ N(0, 0.1), then projected.
template <typename T>
Tensor<T> constrained_init(int64_t filters, int64_t kernel_size, uint64_t seed) {
  Tensor<T> w({filters, kernel_size * kernel_size});
  Rng rng(seed);
  for (int64_t f = 0; f < filters; ++f) randomize_filter(w, f, rng);
  project_bank_rescue(w, rng);
  return w;
}

struct BankDeviation {
  double max_center = 0.0;   // max |w(center) + 1|
  double max_off_sum = 0.0;  // max |sum(off-center) - 1|
};

template <typename T>
BankDeviation bank_deviation(const Tensor<T>& w) {
  const int64_t K = w.shape[0], kk = w.shape[1], center = kk / 2;
  BankDeviation d;
  for (int64_t f = 0; f < K; ++f) {
    const T* row = w.ptr() + f * kk;
    double off_sum = 0;
    for (int64_t i = 0; i < kk; ++i)
      if (i != center) off_sum += static_cast<double>(row[i]);
    d.max_center = std::max(d.max_center, std::abs(static_cast<double>(row[center]) + 1.0));
    d.max_off_sum = std::max(d.max_off_sum, std::abs(off_sum - 1.0));
  }
  return d;
}

// Standalone valid cross-correlation of one single-channel input with the
// bank: {H,W} -> {K, H-k+1, W-k+1}. Signed output, no bias, no activation.
template <typename T>
Tensor<T> constrained_forward(const Tensor<T>& bank, const Tensor<T>& input) {
  require(input.shape.size() == 2, "input must be 2-D");
  const int64_t H = input.shape[0], W = input.shape[1];
  const int64_t K = bank.shape[0];
  const int64_t k = bank_kernel_size(bank);
  require(H >= k && W >= k, "input smaller than kernel");
  const int64_t oh = conv_out_dim(H, k, 1), ow = conv_out_dim(W, k, 1);
  Tensor<T> col({k * k, oh * ow});
  nn_par::im2col(input.ptr(), col.ptr(), 1, H, W, k, 1);
  Tensor<T> out({K, oh, ow});
  gemm(false, false, K, oh * ow, k * k, T(1), bank.ptr(), k * k, col.ptr(), oh * ow, T(0),
       out.ptr(), oh * ow);
  return out;
}

}  // namespace ipdp
