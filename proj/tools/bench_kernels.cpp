// Serial reference vs OpenMP kernel benchmarks. Run with --benchmark_filter
// to narrow; each kernel appears twice so the speedup reads directly off
// the report.

#include <benchmark/benchmark.h>

#include "ipdp/manip.hpp"
#include "ipdp/nn/kernels.hpp"
#include "ipdp/nn/tensor.hpp"
#include "ipdp/rng.hpp"

using namespace ipdp;

namespace {

Patch random_patch(int size, uint64_t seed) {
  Patch p(size, size);
  Rng rng(seed);
  for (auto& v : p.pixels) v = static_cast<uint8_t>(rng.next_below(256));
  return p;
}

Tensor<float> random_tensor(std::vector<int64_t> shape, uint64_t seed) {
  Tensor<float> t(std::move(shape));
  Rng rng(seed);
  for (auto& v : t.data) v = static_cast<float>(rng.uniform(-1, 1));
  return t;
}

const Patch kPatch = random_patch(150, 1);

void bm_blur_serial(benchmark::State& state) {
  Patch out;
  for (auto _ : state) {
    ref::gaussian_blur(kPatch, 1.1, 5, out);
    benchmark::DoNotOptimize(out.pixels.data());
  }
}
void bm_blur_omp(benchmark::State& state) {
  Patch out;
  for (auto _ : state) {
    par::gaussian_blur(kPatch, 1.1, 5, out);
    benchmark::DoNotOptimize(out.pixels.data());
  }
}

void bm_median_serial(benchmark::State& state) {
  Patch out;
  for (auto _ : state) {
    ref::median_filter(kPatch, 5, out);
    benchmark::DoNotOptimize(out.pixels.data());
  }
}
void bm_median_omp(benchmark::State& state) {
  Patch out;
  for (auto _ : state) {
    par::median_filter(kPatch, 5, out);
    benchmark::DoNotOptimize(out.pixels.data());
  }
}

void bm_resample_serial(benchmark::State& state) {
  Patch out;
  for (auto _ : state) {
    ref::resample_bilinear(kPatch, 1.5, out);
    benchmark::DoNotOptimize(out.pixels.data());
  }
}
void bm_resample_omp(benchmark::State& state) {
  Patch out;
  for (auto _ : state) {
    par::resample_bilinear(kPatch, 1.5, out);
    benchmark::DoNotOptimize(out.pixels.data());
  }
}

void bm_awgn_serial(benchmark::State& state) {
  Patch out;
  for (auto _ : state) {
    ref::awgn(kPatch, 2.0, 9, out);
    benchmark::DoNotOptimize(out.pixels.data());
  }
}
void bm_awgn_omp(benchmark::State& state) {
  Patch out;
  for (auto _ : state) {
    par::awgn(kPatch, 2.0, 9, out);
    benchmark::DoNotOptimize(out.pixels.data());
  }
}

// conv2-shaped im2col: 16 channels 146x146, 7x7 stride 2
void bm_im2col_serial(benchmark::State& state) {
  const auto x = random_tensor({16, 146, 146}, 2);
  const int64_t oh = conv_out_dim(146, 7, 2);
  Tensor<float> col({16 * 49, oh * oh});
  for (auto _ : state) {
    nn_ref::im2col(x.ptr(), col.ptr(), 16, 146, 146, 7, 2);
    benchmark::DoNotOptimize(col.ptr());
  }
}
void bm_im2col_omp(benchmark::State& state) {
  const auto x = random_tensor({16, 146, 146}, 2);
  const int64_t oh = conv_out_dim(146, 7, 2);
  Tensor<float> col({16 * 49, oh * oh});
  for (auto _ : state) {
    nn_par::im2col(x.ptr(), col.ptr(), 16, 146, 146, 7, 2);
    benchmark::DoNotOptimize(col.ptr());
  }
}

void bm_maxpool_serial(benchmark::State& state) {
  const auto x = random_tensor({64, 70, 70}, 3);
  const int64_t oh = conv_out_dim(70, 3, 2);
  Tensor<float> y({64, oh, oh});
  Tensor<int32_t> idx({64, oh, oh});
  for (auto _ : state) {
    nn_ref::maxpool_forward(x.ptr(), y.ptr(), idx.ptr(), 64, 70, 70, 3, 2);
    benchmark::DoNotOptimize(y.ptr());
  }
}
void bm_maxpool_omp(benchmark::State& state) {
  const auto x = random_tensor({64, 70, 70}, 3);
  const int64_t oh = conv_out_dim(70, 3, 2);
  Tensor<float> y({64, oh, oh});
  Tensor<int32_t> idx({64, oh, oh});
  for (auto _ : state) {
    nn_par::maxpool_forward(x.ptr(), y.ptr(), idx.ptr(), 64, 70, 70, 3, 2);
    benchmark::DoNotOptimize(y.ptr());
  }
}

void bm_bn_serial(benchmark::State& state) {
  const auto x = random_tensor({32, 64, 70 * 70}, 4);
  Tensor<float> y(x.shape), xhat(x.shape);
  Tensor<float> gamma({64}), beta({64}), mean({64}), var({64}), inv({64});
  gamma.fill(1.f);
  for (auto _ : state) {
    nn_ref::bn_forward_train(x.ptr(), y.ptr(), xhat.ptr(), 32, 64, 70 * 70, gamma.ptr(),
                             beta.ptr(), mean.ptr(), var.ptr(), inv.ptr(), 1e-5f);
    benchmark::DoNotOptimize(y.ptr());
  }
}
void bm_bn_omp(benchmark::State& state) {
  const auto x = random_tensor({32, 64, 70 * 70}, 4);
  Tensor<float> y(x.shape), xhat(x.shape);
  Tensor<float> gamma({64}), beta({64}), mean({64}), var({64}), inv({64});
  gamma.fill(1.f);
  for (auto _ : state) {
    nn_par::bn_forward_train(x.ptr(), y.ptr(), xhat.ptr(), 32, 64, 70 * 70, gamma.ptr(),
                             beta.ptr(), mean.ptr(), var.ptr(), inv.ptr(), 1e-5f);
    benchmark::DoNotOptimize(y.ptr());
  }
}

void bm_sigmoid_serial(benchmark::State& state) {
  const auto x = random_tensor({32 * 4096}, 5);
  Tensor<float> y(x.shape);
  for (auto _ : state) {
    nn_ref::sigmoid_forward(x.ptr(), y.ptr(), x.numel());
    benchmark::DoNotOptimize(y.ptr());
  }
}
void bm_sigmoid_omp(benchmark::State& state) {
  const auto x = random_tensor({32 * 4096}, 5);
  Tensor<float> y(x.shape);
  for (auto _ : state) {
    nn_par::sigmoid_forward(x.ptr(), y.ptr(), x.numel());
    benchmark::DoNotOptimize(y.ptr());
  }
}

BENCHMARK(bm_blur_serial);
BENCHMARK(bm_blur_omp);
BENCHMARK(bm_median_serial);
BENCHMARK(bm_median_omp);
BENCHMARK(bm_resample_serial);
BENCHMARK(bm_resample_omp);
BENCHMARK(bm_awgn_serial);
BENCHMARK(bm_awgn_omp);
BENCHMARK(bm_im2col_serial);
BENCHMARK(bm_im2col_omp);
BENCHMARK(bm_maxpool_serial);
BENCHMARK(bm_maxpool_omp);
BENCHMARK(bm_bn_serial);
BENCHMARK(bm_bn_omp);
BENCHMARK(bm_sigmoid_serial);
BENCHMARK(bm_sigmoid_omp);

}  // namespace

BENCHMARK_MAIN();
