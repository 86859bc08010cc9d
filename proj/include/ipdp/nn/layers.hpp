#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ipdp/nn/kernels.hpp"
#include "ipdp/nn/tensor.hpp"
#include "ipdp/rng.hpp"

namespace ipdp {

template <typename T>
struct ParamSlot {
  std::string name;
  Tensor<T>* value;
  Tensor<T>* grad;
};

// Valid-padding cross-correlation, NCHW, weights stored GEMM-ready as
// {out_c, in_c*k*k}. The im2col buffers are kept across calls and reused
// by the backward pass.
template <typename T>
struct Conv {
  int64_t in_c = 0, out_c = 0, k = 0, stride = 1;
  bool has_bias = true;
  Tensor<T> w, b, gw, gb;

  // caches
  int64_t B = 0, H = 0, W = 0, oh = 0, ow = 0;
  Tensor<T> col;  // {B, in_c*k*k, oh*ow}

  void configure(int64_t in_channels, int64_t out_channels, int64_t kernel, int64_t stride_,
                 bool bias) {
    in_c = in_channels;
    out_c = out_channels;
    k = kernel;
    stride = stride_;
    has_bias = bias;
    w = Tensor<T>({out_c, in_c * k * k});
    gw = Tensor<T>({out_c, in_c * k * k});
    if (has_bias) {
      b = Tensor<T>({out_c});
      gb = Tensor<T>({out_c});
    }
  }

  void init_glorot(Rng& rng) {
    const double fan_in = static_cast<double>(in_c) * k * k;
    const double fan_out = static_cast<double>(out_c) * k * k;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : w.data) v = static_cast<T>(rng.uniform(-limit, limit));
    if (has_bias) b.zero();
  }

  void forward(const Tensor<T>& x, Tensor<T>& y) {
    B = x.shape[0];
    H = x.shape[2];
    W = x.shape[3];
    oh = conv_out_dim(H, k, stride);
    ow = conv_out_dim(W, k, stride);
    const int64_t ckk = in_c * k * k, ohw = oh * ow;
    col = ensure(std::move(col), {B, ckk, ohw});
    y = ensure(std::move(y), {B, out_c, oh, ow});
    for (int64_t bi = 0; bi < B; ++bi) {
      T* colb = col.ptr() + bi * ckk * ohw;
      nn_par::im2col(x.ptr() + bi * in_c * H * W, colb, in_c, H, W, k, stride);
      gemm(false, false, out_c, ohw, ckk, T(1), w.ptr(), ckk, colb, ohw, T(0),
           y.ptr() + bi * out_c * ohw, ohw);
    }
    if (has_bias) {
      T* yp = y.ptr();
#pragma omp parallel for schedule(static) collapse(2)
      for (int64_t bi = 0; bi < B; ++bi)
        for (int64_t o = 0; o < out_c; ++o) {
          T* row = yp + (bi * out_c + o) * ohw;
          const T bv = b[o];
          for (int64_t s = 0; s < ohw; ++s) row[s] += bv;
        }
    }
  }

  // Accumulates gw/gb; writes dx if non-null. Destroys the col cache.
  void backward(const Tensor<T>& dy, Tensor<T>* dx) {
    const int64_t ckk = in_c * k * k, ohw = oh * ow;
    for (int64_t bi = 0; bi < B; ++bi) {
      const T* dyb = dy.ptr() + bi * out_c * ohw;
      T* colb = col.ptr() + bi * ckk * ohw;
      gemm(false, true, out_c, ckk, ohw, T(1), dyb, ohw, colb, ohw, T(1), gw.ptr(), ckk);
      if (has_bias) {
        for (int64_t o = 0; o < out_c; ++o) {
          const T* row = dyb + o * ohw;
          T s = 0;
          for (int64_t i = 0; i < ohw; ++i) s += row[i];
          gb[o] += s;
        }
      }
      if (dx) {
        // reuse the col slot for dcol
        gemm(true, false, ckk, ohw, out_c, T(1), w.ptr(), ckk, dyb, ohw, T(0), colb, ohw);
      }
    }
    if (dx) {
      *dx = ensure(std::move(*dx), {B, in_c, H, W});
      dx->zero();
#pragma omp parallel for schedule(static)
      for (int64_t bi = 0; bi < B; ++bi)
        nn_ref::col2im(col.ptr() + bi * ckk * ohw, dx->ptr() + bi * in_c * H * W, in_c, H, W, k,
                       stride);
    }
  }

  static Tensor<T> ensure(Tensor<T> t, std::vector<int64_t> shape) {
    if (t.shape != shape) t = Tensor<T>(shape);
    return t;
  }
};

template <typename T>
struct BatchNorm {
  int64_t C = 0;
  T eps = static_cast<T>(1e-5);
  T momentum = static_cast<T>(0.1);  // running = (1-m)*running + m*batch
  Tensor<T> gamma, beta, g_gamma, g_beta;
  Tensor<T> running_mean, running_var;

  // caches
  Tensor<T> xhat, invstd, batch_mean, batch_var;
  bool cached_train = false;

  void configure(int64_t channels) {
    C = channels;
    gamma = Tensor<T>({C});
    gamma.fill(T(1));
    beta = Tensor<T>({C});
    g_gamma = Tensor<T>({C});
    g_beta = Tensor<T>({C});
    running_mean = Tensor<T>({C});
    running_var = Tensor<T>({C});
    running_var.fill(T(1));
    invstd = Tensor<T>({C});
    batch_mean = Tensor<T>({C});
    batch_var = Tensor<T>({C});
  }

  void forward(const Tensor<T>& x, Tensor<T>& y, bool train) {
    const int64_t B = x.shape[0], HW = x.numel() / (x.shape[0] * C);
    y = Conv<T>::ensure(std::move(y), x.shape);
    xhat = Conv<T>::ensure(std::move(xhat), x.shape);
    cached_train = train;
    if (train) {
      nn_par::bn_forward_train(x.ptr(), y.ptr(), xhat.ptr(), B, C, HW, gamma.ptr(), beta.ptr(),
                               batch_mean.ptr(), batch_var.ptr(), invstd.ptr(), eps);
      for (int64_t c = 0; c < C; ++c) {
        running_mean[c] = (T(1) - momentum) * running_mean[c] + momentum * batch_mean[c];
        running_var[c] = (T(1) - momentum) * running_var[c] + momentum * batch_var[c];
      }
    } else {
      nn_par::bn_forward_eval(x.ptr(), y.ptr(), xhat.ptr(), B, C, HW, gamma.ptr(), beta.ptr(),
                              running_mean.ptr(), running_var.ptr(), eps);
      for (int64_t c = 0; c < C; ++c) invstd[c] = T(1) / std::sqrt(running_var[c] + eps);
    }
  }

  void backward(const Tensor<T>& dy, Tensor<T>& dx) {
    const int64_t B = dy.shape[0], HW = dy.numel() / (dy.shape[0] * C);
    dx = Conv<T>::ensure(std::move(dx), dy.shape);
    nn_par::bn_backward(dy.ptr(), xhat.ptr(), dx.ptr(), B, C, HW, gamma.ptr(), invstd.ptr(),
                        g_gamma.ptr(), g_beta.ptr(), cached_train);
  }
};

template <typename T>
struct MaxPool {
  int64_t k = 0, stride = 0;
  int64_t B = 0, C = 0, H = 0, W = 0, oh = 0, ow = 0;
  Tensor<int32_t> idx;

  void configure(int64_t kernel, int64_t stride_) {
    k = kernel;
    stride = stride_;
  }

  void forward(const Tensor<T>& x, Tensor<T>& y) {
    B = x.shape[0];
    C = x.shape[1];
    H = x.shape[2];
    W = x.shape[3];
    oh = conv_out_dim(H, k, stride);
    ow = conv_out_dim(W, k, stride);
    y = Conv<T>::ensure(std::move(y), {B, C, oh, ow});
    if (idx.shape != y.shape) idx = Tensor<int32_t>(y.shape);
    for (int64_t bi = 0; bi < B; ++bi)
      nn_par::maxpool_forward(x.ptr() + bi * C * H * W, y.ptr() + bi * C * oh * ow,
                              idx.ptr() + bi * C * oh * ow, C, H, W, k, stride);
  }

  void backward(const Tensor<T>& dy, Tensor<T>& dx) {
    dx = Conv<T>::ensure(std::move(dx), {B, C, H, W});
    dx.zero();
    for (int64_t bi = 0; bi < B; ++bi)
      nn_par::maxpool_backward(dy.ptr() + bi * C * oh * ow, idx.ptr() + bi * C * oh * ow,
                               dx.ptr() + bi * C * H * W, C, oh * ow);
  }
};

template <typename T>
struct Dense {
  int64_t in = 0, out = 0;
  Tensor<T> w, b, gw, gb;  // w: {out, in}
  Tensor<T> x_cache;       // {B, in}

  void configure(int64_t in_, int64_t out_) {
    in = in_;
    out = out_;
    w = Tensor<T>({out, in});
    gw = Tensor<T>({out, in});
    b = Tensor<T>({out});
    gb = Tensor<T>({out});
  }

  void init_glorot(Rng& rng) {
    const double limit = std::sqrt(6.0 / (static_cast<double>(in) + static_cast<double>(out)));
    for (auto& v : w.data) v = static_cast<T>(rng.uniform(-limit, limit));
    b.zero();
  }

  // x: {B, in} -> y: {B, out}
  void forward(const Tensor<T>& x, Tensor<T>& y) {
    const int64_t B = x.shape[0];
    x_cache = x;
    y = Conv<T>::ensure(std::move(y), {B, out});
    gemm(false, true, B, out, in, T(1), x.ptr(), in, w.ptr(), in, T(0), y.ptr(), out);
    T* yp = y.ptr();
#pragma omp parallel for schedule(static)
    for (int64_t bi = 0; bi < B; ++bi)
      for (int64_t o = 0; o < out; ++o) yp[bi * out + o] += b[o];
  }

  void backward(const Tensor<T>& dy, Tensor<T>* dx) {
    const int64_t B = dy.shape[0];
    gemm(true, false, out, in, B, T(1), dy.ptr(), out, x_cache.ptr(), in, T(1), gw.ptr(), in);
    for (int64_t bi = 0; bi < B; ++bi)
      for (int64_t o = 0; o < out; ++o) gb[o] += dy.ptr()[bi * out + o];
    if (dx) {
      *dx = Conv<T>::ensure(std::move(*dx), {B, in});
      gemm(false, false, B, in, out, T(1), dy.ptr(), out, w.ptr(), in, T(0), dx->ptr(), in);
    }
  }
};

}  // namespace ipdp
