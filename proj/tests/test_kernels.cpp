#include <doctest.h>

#include <cmath>
#include <vector>

#include "ipdp/nn/kernels.hpp"
#include "ipdp/nn/tensor.hpp"
#include "ipdp/rng.hpp"

using namespace ipdp;

namespace {

Tensor<float> random_tensor(std::vector<int64_t> shape, uint64_t seed, float lo = -1.f,
                            float hi = 1.f) {
  Tensor<float> t(shape);
  Rng rng(seed);
  for (auto& v : t.data) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

}  // namespace

TEST_CASE("gemm matches a naive triple loop") {
  const int64_t M = 7, N = 5, K = 9;
  auto a = random_tensor({M, K}, 1);
  auto b = random_tensor({K, N}, 2);
  Tensor<float> c({M, N});
  gemm(false, false, M, N, K, 1.f, a.ptr(), K, b.ptr(), N, 0.f, c.ptr(), N);
  for (int64_t i = 0; i < M; ++i)
    for (int64_t j = 0; j < N; ++j) {
      float acc = 0;
      for (int64_t k = 0; k < K; ++k) acc += a[i * K + k] * b[k * N + j];
      CHECK(c[i * N + j] == doctest::Approx(acc).epsilon(1e-5));
    }
}

TEST_CASE("im2col/col2im parallel kernels equal serial references") {
  const int64_t C = 3, H = 17, W = 13, k = 5, stride = 2;
  const auto x = random_tensor({C, H, W}, 3);
  const int64_t oh = conv_out_dim(H, k, stride), ow = conv_out_dim(W, k, stride);
  Tensor<float> col_a({C * k * k, oh * ow}), col_b(col_a.shape);
  nn_ref::im2col(x.ptr(), col_a.ptr(), C, H, W, k, stride);
  nn_par::im2col(x.ptr(), col_b.ptr(), C, H, W, k, stride);
  CHECK(col_a.data == col_b.data);

  Tensor<float> xa({C, H, W}), xb({C, H, W});
  nn_ref::col2im(col_a.ptr(), xa.ptr(), C, H, W, k, stride);
  nn_par::col2im(col_a.ptr(), xb.ptr(), C, H, W, k, stride);
  CHECK(xa.data == xb.data);
}

TEST_CASE("col2im is the adjoint of im2col") {
  // <im2col(x), c> == <x, col2im(c)> for random x and c
  const int64_t C = 2, H = 11, W = 9, k = 3, stride = 2;
  const int64_t oh = conv_out_dim(H, k, stride), ow = conv_out_dim(W, k, stride);
  const auto x = random_tensor({C, H, W}, 4);
  const auto c = random_tensor({C * k * k, oh * ow}, 5);
  Tensor<float> colx({C * k * k, oh * ow});
  nn_par::im2col(x.ptr(), colx.ptr(), C, H, W, k, stride);
  Tensor<float> back({C, H, W});
  nn_par::col2im(c.ptr(), back.ptr(), C, H, W, k, stride);
  double lhs = 0, rhs = 0;
  for (int64_t i = 0; i < colx.numel(); ++i) lhs += static_cast<double>(colx[i]) * c[i];
  for (int64_t i = 0; i < x.numel(); ++i) rhs += static_cast<double>(x[i]) * back[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-5));
}

TEST_CASE("maxpool forward/backward: hand case and par/ref agreement") {
  // 1 channel, 4x4, pool 2 stride 2
  Tensor<float> x({1, 4, 4});
  const float vals[16] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
  for (int i = 0; i < 16; ++i) x[i] = vals[i];
  Tensor<float> y({1, 2, 2});
  Tensor<int32_t> idx({1, 2, 2});
  nn_par::maxpool_forward(x.ptr(), y.ptr(), idx.ptr(), 1, 4, 4, 2, 2);
  CHECK(y[0] == 6.f);
  CHECK(y[1] == 8.f);
  CHECK(y[2] == 14.f);
  CHECK(y[3] == 16.f);

  const auto big = random_tensor({4, 15, 15}, 6);
  const int64_t oh = conv_out_dim(15, 3, 2);
  Tensor<float> ya({4, oh, oh}), yb({4, oh, oh});
  Tensor<int32_t> ia({4, oh, oh}), ib({4, oh, oh});
  nn_ref::maxpool_forward(big.ptr(), ya.ptr(), ia.ptr(), 4, 15, 15, 3, 2);
  nn_par::maxpool_forward(big.ptr(), yb.ptr(), ib.ptr(), 4, 15, 15, 3, 2);
  CHECK(ya.data == yb.data);
  CHECK(ia.data == ib.data);

  const auto dy = random_tensor({4, oh, oh}, 7);
  Tensor<float> dxa({4, 15, 15}), dxb({4, 15, 15});
  nn_ref::maxpool_backward(dy.ptr(), ia.ptr(), dxa.ptr(), 4, oh * oh);
  nn_par::maxpool_backward(dy.ptr(), ib.ptr(), dxb.ptr(), 4, oh * oh);
  CHECK(dxa.data == dxb.data);
}

TEST_CASE("batchnorm: normalized statistics and par/ref agreement") {
  const int64_t B = 6, C = 3, HW = 50;
  const auto x = random_tensor({B, C, HW}, 8, -3.f, 5.f);
  Tensor<float> gamma({C}), beta({C});
  gamma.fill(1.5f);
  beta.fill(0.25f);
  Tensor<float> ya(x.shape), yb(x.shape), ha(x.shape), hb(x.shape);
  Tensor<float> mean_a({C}), var_a({C}), inv_a({C}), mean_b({C}), var_b({C}), inv_b({C});
  nn_ref::bn_forward_train(x.ptr(), ya.ptr(), ha.ptr(), B, C, HW, gamma.ptr(), beta.ptr(),
                           mean_a.ptr(), var_a.ptr(), inv_a.ptr(), 1e-5f);
  nn_par::bn_forward_train(x.ptr(), yb.ptr(), hb.ptr(), B, C, HW, gamma.ptr(), beta.ptr(),
                           mean_b.ptr(), var_b.ptr(), inv_b.ptr(), 1e-5f);
  CHECK(ya.data == yb.data);
  CHECK(mean_a.data == mean_b.data);

  // per channel, xhat has mean ~0 and variance ~1
  for (int64_t c = 0; c < C; ++c) {
    double s = 0, sq = 0;
    for (int64_t b = 0; b < B; ++b)
      for (int64_t i = 0; i < HW; ++i) {
        const double v = ha[(b * C + c) * HW + i];
        s += v;
        sq += v * v;
      }
    const double n = static_cast<double>(B * HW);
    CHECK(std::abs(s / n) < 1e-5);
    CHECK(sq / n == doctest::Approx(1.0).epsilon(1e-3));
  }

  const auto dy = random_tensor({B, C, HW}, 9);
  Tensor<float> dxa(x.shape), dxb(x.shape);
  Tensor<float> dga({C}), dba({C}), dgb({C}), dbb({C});
  nn_ref::bn_backward(dy.ptr(), ha.ptr(), dxa.ptr(), B, C, HW, gamma.ptr(), inv_a.ptr(),
                      dga.ptr(), dba.ptr(), true);
  nn_par::bn_backward(dy.ptr(), hb.ptr(), dxb.ptr(), B, C, HW, gamma.ptr(), inv_b.ptr(),
                      dgb.ptr(), dbb.ptr(), true);
  CHECK(dxa.data == dxb.data);
  CHECK(dga.data == dgb.data);
}

TEST_CASE("elementwise kernels: par equals ref") {
  const auto x = random_tensor({4096}, 10, -4.f, 4.f);
  Tensor<float> a(x.shape), b(x.shape);
  nn_ref::sigmoid_forward(x.ptr(), a.ptr(), x.numel());
  nn_par::sigmoid_forward(x.ptr(), b.ptr(), x.numel());
  CHECK(a.data == b.data);

  nn_ref::relu_forward(x.ptr(), a.ptr(), x.numel());
  nn_par::relu_forward(x.ptr(), b.ptr(), x.numel());
  CHECK(a.data == b.data);

  nn_ref::dropout_forward(x.ptr(), a.ptr(), x.numel(), 0.5, 123);
  nn_par::dropout_forward(x.ptr(), b.ptr(), x.numel(), 0.5, 123);
  CHECK(a.data == b.data);

  // dropout keeps roughly half and doubles survivors
  int64_t kept = 0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    if (a[i] != 0.f) {
      ++kept;
      CHECK(a[i] == doctest::Approx(2.f * x[i]));
    }
  }
  CHECK(kept > 1600);
  CHECK(kept < 2500);

  Tensor<uint8_t> bytes({1000});
  for (int64_t i = 0; i < 1000; ++i) bytes[i] = static_cast<uint8_t>(i % 256);
  Tensor<float> ua({1000}), ub({1000});
  nn_ref::scale_to_unit(bytes.ptr(), ua.ptr(), 1000);
  nn_par::scale_to_unit(bytes.ptr(), ub.ptr(), 1000);
  CHECK(ua.data == ub.data);
  CHECK(ua[255] == 1.0f);
  CHECK(ua[0] == 0.0f);
}
