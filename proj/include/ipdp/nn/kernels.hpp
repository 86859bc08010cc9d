#pragma once

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "ipdp/rng.hpp"

// Layer compute kernels. Every data-parallel kernel exists twice: a serial
// reference under nn_ref:: and the OpenMP version under nn_par:: that the
// layers actually run. The two are bit-identical by construction (disjoint
// writes, per-element arithmetic shared, reductions kept within one thread
// per channel). GEMM is delegated to BLAS.

namespace ipdp {

inline void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k, float alpha,
                 const float* a, int64_t lda, const float* b, int64_t ldb, float beta, float* c,
                 int64_t ldc) {
  cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
              static_cast<int>(k), alpha, a, static_cast<int>(lda), b, static_cast<int>(ldb), beta,
              c, static_cast<int>(ldc));
}

inline void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k, double alpha,
                 const double* a, int64_t lda, const double* b, int64_t ldb, double beta, double* c,
                 int64_t ldc) {
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
              static_cast<int>(k), alpha, a, static_cast<int>(lda), b, static_cast<int>(ldb), beta,
              c, static_cast<int>(ldc));
}

inline int64_t conv_out_dim(int64_t in, int64_t k, int64_t stride) {
  return (in - k) / stride + 1;
}

// Dropout keep decisions come from a counter-based stream so the mask for
// element i is independent of evaluation order.
inline bool dropout_keep(uint64_t seed, uint64_t i, double p) {
  const double u = static_cast<double>(splitmix64(seed + i * kGolden) >> 11) * 0x1.0p-53;
  return u >= p;
}

namespace detail {

template <typename T>
inline void im2col_row(const T* x, T* col, int64_t H, int64_t W, int64_t k, int64_t stride,
                       int64_t oh, int64_t ow, int64_t row) {
  const int64_t c = row / (k * k);
  const int64_t ki = (row / k) % k;
  const int64_t kj = row % k;
  const T* plane = x + c * H * W;
  T* dst = col + row * oh * ow;
  for (int64_t oy = 0; oy < oh; ++oy) {
    const T* src = plane + (oy * stride + ki) * W + kj;
    for (int64_t ox = 0; ox < ow; ++ox) dst[oy * ow + ox] = src[ox * stride];
  }
}

template <typename T>
inline void col2im_channel(const T* col, T* x, int64_t H, int64_t W, int64_t k, int64_t stride,
                           int64_t oh, int64_t ow, int64_t c) {
  T* plane = x + c * H * W;
  for (int64_t ki = 0; ki < k; ++ki) {
    for (int64_t kj = 0; kj < k; ++kj) {
      const T* src = col + ((c * k + ki) * k + kj) * oh * ow;
      for (int64_t oy = 0; oy < oh; ++oy) {
        T* dst = plane + (oy * stride + ki) * W + kj;
        for (int64_t ox = 0; ox < ow; ++ox) dst[ox * stride] += src[oy * ow + ox];
      }
    }
  }
}

template <typename T>
inline void maxpool_channel(const T* x, T* y, int32_t* idx, int64_t H, int64_t W, int64_t k,
                            int64_t stride, int64_t oh, int64_t ow, int64_t c) {
  const T* plane = x + c * H * W;
  T* out = y + c * oh * ow;
  int32_t* id = idx + c * oh * ow;
  for (int64_t oy = 0; oy < oh; ++oy) {
    for (int64_t ox = 0; ox < ow; ++ox) {
      int64_t best = (oy * stride) * W + ox * stride;
      T best_v = plane[best];
      for (int64_t ki = 0; ki < k; ++ki) {
        for (int64_t kj = 0; kj < k; ++kj) {
          const int64_t p = (oy * stride + ki) * W + ox * stride + kj;
          if (plane[p] > best_v) {
            best_v = plane[p];
            best = p;
          }
        }
      }
      out[oy * ow + ox] = best_v;
      id[oy * ow + ox] = static_cast<int32_t>(c * H * W + best);
    }
  }
}

template <typename T>
inline void bn_channel_train(const T* x, T* y, T* xhat, int64_t B, int64_t C, int64_t HW, T gamma,
                             T beta, T* mean_out, T* var_out, T* invstd_out, T eps, int64_t c) {
  const int64_t n = B * HW;
  T sum = 0;
  for (int64_t b = 0; b < B; ++b) {
    const T* p = x + (b * C + c) * HW;
    for (int64_t s = 0; s < HW; ++s) sum += p[s];
  }
  const T mean = sum / static_cast<T>(n);
  T sq = 0;
  for (int64_t b = 0; b < B; ++b) {
    const T* p = x + (b * C + c) * HW;
    for (int64_t s = 0; s < HW; ++s) {
      const T d = p[s] - mean;
      sq += d * d;
    }
  }
  const T var = sq / static_cast<T>(n);
  const T invstd = T(1) / std::sqrt(var + eps);
  *mean_out = mean;
  *var_out = var;
  *invstd_out = invstd;
  for (int64_t b = 0; b < B; ++b) {
    const T* p = x + (b * C + c) * HW;
    T* ph = xhat + (b * C + c) * HW;
    T* py = y + (b * C + c) * HW;
    for (int64_t s = 0; s < HW; ++s) {
      ph[s] = (p[s] - mean) * invstd;
      py[s] = gamma * ph[s] + beta;
    }
  }
}

template <typename T>
inline void bn_channel_eval(const T* x, T* y, T* xhat, int64_t B, int64_t C, int64_t HW, T gamma,
                            T beta, T mean, T var, T eps, int64_t c) {
  const T invstd = T(1) / std::sqrt(var + eps);
  for (int64_t b = 0; b < B; ++b) {
    const T* p = x + (b * C + c) * HW;
    T* ph = xhat + (b * C + c) * HW;
    T* py = y + (b * C + c) * HW;
    for (int64_t s = 0; s < HW; ++s) {
      ph[s] = (p[s] - mean) * invstd;
      py[s] = gamma * ph[s] + beta;
    }
  }
}

// Backward through batch statistics:
//   dx = gamma*invstd/N * (N*dy - sum(dy) - xhat*sum(dy*xhat))
template <typename T>
inline void bn_channel_backward_train(const T* dy, const T* xhat, T* dx, int64_t B, int64_t C,
                                      int64_t HW, T gamma, T invstd, T* dgamma, T* dbeta,
                                      int64_t c) {
  const int64_t n = B * HW;
  T sum_dy = 0, sum_dy_xhat = 0;
  for (int64_t b = 0; b < B; ++b) {
    const T* pdy = dy + (b * C + c) * HW;
    const T* ph = xhat + (b * C + c) * HW;
    for (int64_t s = 0; s < HW; ++s) {
      sum_dy += pdy[s];
      sum_dy_xhat += pdy[s] * ph[s];
    }
  }
  *dgamma += sum_dy_xhat;
  *dbeta += sum_dy;
  const T scale = gamma * invstd / static_cast<T>(n);
  for (int64_t b = 0; b < B; ++b) {
    const T* pdy = dy + (b * C + c) * HW;
    const T* ph = xhat + (b * C + c) * HW;
    T* pdx = dx + (b * C + c) * HW;
    for (int64_t s = 0; s < HW; ++s)
      pdx[s] = scale * (static_cast<T>(n) * pdy[s] - sum_dy - ph[s] * sum_dy_xhat);
  }
}

// Eval-mode statistics are constants; only the affine part propagates.
template <typename T>
inline void bn_channel_backward_eval(const T* dy, const T* xhat, T* dx, int64_t B, int64_t C,
                                     int64_t HW, T gamma, T invstd, T* dgamma, T* dbeta,
                                     int64_t c) {
  T sum_dy = 0, sum_dy_xhat = 0;
  const T scale = gamma * invstd;
  for (int64_t b = 0; b < B; ++b) {
    const T* pdy = dy + (b * C + c) * HW;
    const T* ph = xhat + (b * C + c) * HW;
    T* pdx = dx + (b * C + c) * HW;
    for (int64_t s = 0; s < HW; ++s) {
      sum_dy += pdy[s];
      sum_dy_xhat += pdy[s] * ph[s];
      pdx[s] = scale * pdy[s];
    }
  }
  *dgamma += sum_dy_xhat;
  *dbeta += sum_dy;
}

}  // namespace detail

namespace nn_ref {

template <typename T>
void im2col(const T* x, T* col, int64_t C, int64_t H, int64_t W, int64_t k, int64_t stride) {
  const int64_t oh = conv_out_dim(H, k, stride), ow = conv_out_dim(W, k, stride);
  for (int64_t row = 0; row < C * k * k; ++row)
    detail::im2col_row(x, col, H, W, k, stride, oh, ow, row);
}

template <typename T>
void col2im(const T* col, T* x, int64_t C, int64_t H, int64_t W, int64_t k, int64_t stride) {
  const int64_t oh = conv_out_dim(H, k, stride), ow = conv_out_dim(W, k, stride);
  for (int64_t c = 0; c < C; ++c) detail::col2im_channel(col, x, H, W, k, stride, oh, ow, c);
}

template <typename T>
void maxpool_forward(const T* x, T* y, int32_t* idx, int64_t C, int64_t H, int64_t W, int64_t k,
                     int64_t stride) {
  const int64_t oh = conv_out_dim(H, k, stride), ow = conv_out_dim(W, k, stride);
  for (int64_t c = 0; c < C; ++c) detail::maxpool_channel(x, y, idx, H, W, k, stride, oh, ow, c);
}

template <typename T>
void maxpool_backward(const T* dy, const int32_t* idx, T* dx, int64_t C, int64_t out_hw) {
  for (int64_t i = 0; i < C * out_hw; ++i) dx[idx[i]] += dy[i];
}

template <typename T>
void sigmoid_forward(const T* x, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
}

template <typename T>
void sigmoid_backward(const T* dy, const T* y, T* dx, int64_t n) {
  for (int64_t i = 0; i < n; ++i) dx[i] = dy[i] * y[i] * (T(1) - y[i]);
}

template <typename T>
void relu_forward(const T* x, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(const T* dy, const T* y, T* dx, int64_t n) {
  for (int64_t i = 0; i < n; ++i) dx[i] = y[i] > T(0) ? dy[i] : T(0);
}

template <typename T>
void dropout_forward(const T* x, T* y, int64_t n, double p, uint64_t seed) {
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  for (int64_t i = 0; i < n; ++i)
    y[i] = dropout_keep(seed, static_cast<uint64_t>(i), p) ? x[i] * scale : T(0);
}

template <typename T>
void dropout_backward(const T* dy, T* dx, int64_t n, double p, uint64_t seed) {
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  for (int64_t i = 0; i < n; ++i)
    dx[i] = dropout_keep(seed, static_cast<uint64_t>(i), p) ? dy[i] * scale : T(0);
}

template <typename T>
void bn_forward_train(const T* x, T* y, T* xhat, int64_t B, int64_t C, int64_t HW, const T* gamma,
                      const T* beta, T* mean, T* var, T* invstd, T eps) {
  for (int64_t c = 0; c < C; ++c)
    detail::bn_channel_train(x, y, xhat, B, C, HW, gamma[c], beta[c], &mean[c], &var[c],
                             &invstd[c], eps, c);
}

template <typename T>
void bn_forward_eval(const T* x, T* y, T* xhat, int64_t B, int64_t C, int64_t HW, const T* gamma,
                     const T* beta, const T* mean, const T* var, T eps) {
  for (int64_t c = 0; c < C; ++c)
    detail::bn_channel_eval(x, y, xhat, B, C, HW, gamma[c], beta[c], mean[c], var[c], eps, c);
}

template <typename T>
void bn_backward(const T* dy, const T* xhat, T* dx, int64_t B, int64_t C, int64_t HW,
                 const T* gamma, const T* invstd, T* dgamma, T* dbeta, bool train_stats) {
  for (int64_t c = 0; c < C; ++c) {
    if (train_stats)
      detail::bn_channel_backward_train(dy, xhat, dx, B, C, HW, gamma[c], invstd[c], &dgamma[c],
                                        &dbeta[c], c);
    else
      detail::bn_channel_backward_eval(dy, xhat, dx, B, C, HW, gamma[c], invstd[c], &dgamma[c],
                                       &dbeta[c], c);
  }
}

// Batch of 8-bit patches -> float planes scaled to [0,1].
template <typename T>
void scale_to_unit(const uint8_t* x, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = static_cast<T>(x[i]) / T(255);
}

}  // namespace nn_ref

namespace nn_par {

template <typename T>
void im2col(const T* x, T* col, int64_t C, int64_t H, int64_t W, int64_t k, int64_t stride) {
  const int64_t oh = conv_out_dim(H, k, stride), ow = conv_out_dim(W, k, stride);
  const int64_t rows = C * k * k;
#pragma omp parallel for schedule(static)
  for (int64_t row = 0; row < rows; ++row)
    detail::im2col_row(x, col, H, W, k, stride, oh, ow, row);
}

template <typename T>
void col2im(const T* col, T* x, int64_t C, int64_t H, int64_t W, int64_t k, int64_t stride) {
  const int64_t oh = conv_out_dim(H, k, stride), ow = conv_out_dim(W, k, stride);
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < C; ++c) detail::col2im_channel(col, x, H, W, k, stride, oh, ow, c);
}

template <typename T>
void maxpool_forward(const T* x, T* y, int32_t* idx, int64_t C, int64_t H, int64_t W, int64_t k,
                     int64_t stride) {
  const int64_t oh = conv_out_dim(H, k, stride), ow = conv_out_dim(W, k, stride);
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < C; ++c) detail::maxpool_channel(x, y, idx, H, W, k, stride, oh, ow, c);
}

// Scatter writes can collide only within one channel plane; dy indices from
// one channel stay in that channel, so channel-parallel is race-free.
template <typename T>
void maxpool_backward(const T* dy, const int32_t* idx, T* dx, int64_t C, int64_t out_hw) {
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < C; ++c) {
    const int64_t base = c * out_hw;
    for (int64_t i = 0; i < out_hw; ++i) dx[idx[base + i]] += dy[base + i];
  }
}

template <typename T>
void sigmoid_forward(const T* x, T* y, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
}

template <typename T>
void sigmoid_backward(const T* dy, const T* y, T* dx, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) dx[i] = dy[i] * y[i] * (T(1) - y[i]);
}

template <typename T>
void relu_forward(const T* x, T* y, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(const T* dy, const T* y, T* dx, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) dx[i] = y[i] > T(0) ? dy[i] : T(0);
}

template <typename T>
void dropout_forward(const T* x, T* y, int64_t n, double p, uint64_t seed) {
  const T scale = static_cast<T>(1.0 / (1.0 - p));
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i)
    y[i] = dropout_keep(seed, static_cast<uint64_t>(i), p) ? x[i] * scale : T(0);
}

template <typename T>
void dropout_backward(const T* dy, T* dx, int64_t n, double p, uint64_t seed) {
  const T scale = static_cast<T>(1.0 / (1.0 - p));
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i)
    dx[i] = dropout_keep(seed, static_cast<uint64_t>(i), p) ? dy[i] * scale : T(0);
}

template <typename T>
void bn_forward_train(const T* x, T* y, T* xhat, int64_t B, int64_t C, int64_t HW, const T* gamma,
                      const T* beta, T* mean, T* var, T* invstd, T eps) {
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < C; ++c)
    detail::bn_channel_train(x, y, xhat, B, C, HW, gamma[c], beta[c], &mean[c], &var[c],
                             &invstd[c], eps, c);
}

template <typename T>
void bn_forward_eval(const T* x, T* y, T* xhat, int64_t B, int64_t C, int64_t HW, const T* gamma,
                     const T* beta, const T* mean, const T* var, T eps) {
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < C; ++c)
    detail::bn_channel_eval(x, y, xhat, B, C, HW, gamma[c], beta[c], mean[c], var[c], eps, c);
}

template <typename T>
void bn_backward(const T* dy, const T* xhat, T* dx, int64_t B, int64_t C, int64_t HW,
                 const T* gamma, const T* invstd, T* dgamma, T* dbeta, bool train_stats) {
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < C; ++c) {
    if (train_stats)
      detail::bn_channel_backward_train(dy, xhat, dx, B, C, HW, gamma[c], invstd[c], &dgamma[c],
                                        &dbeta[c], c);
    else
      detail::bn_channel_backward_eval(dy, xhat, dx, B, C, HW, gamma[c], invstd[c], &dgamma[c],
                                       &dbeta[c], c);
  }
}

template <typename T>
void scale_to_unit(const uint8_t* x, T* y, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) y[i] = static_cast<T>(x[i]) / T(255);
}

}  // namespace nn_par

}  // namespace ipdp
