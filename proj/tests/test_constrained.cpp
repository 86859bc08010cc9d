#include <doctest.h>

#include <cmath>

#include "ipdp/nn/constrained.hpp"
#include "ipdp/rng.hpp"

using namespace ipdp;

namespace {

template <typename T>
Tensor<T> random_bank(int64_t K, int64_t k, uint64_t seed, double lo = -2.0, double hi = 2.0) {
  Tensor<T> w({K, k * k});
  Rng rng(seed);
  for (auto& v : w.data) v = static_cast<T>(rng.uniform(lo, hi));
  return w;
}

}  // namespace

TEST_CASE("init satisfies the constraints and is seed deterministic") {
  const auto a = constrained_init<float>(16, 5, 7);
  const auto b = constrained_init<float>(16, 5, 7);
  const auto c = constrained_init<float>(16, 5, 8);
  CHECK(a.data == b.data);
  CHECK(a.data != c.data);
  const auto dev = bank_deviation(a);
  CHECK(dev.max_center == 0.0);
  CHECK(dev.max_off_sum < 1e-6);
}

TEST_CASE("project: all-ones filter becomes uniform prediction weights") {
  Tensor<double> w({1, 25});
  w.fill(1.0);
  project_bank(w);
  CHECK(w[12] == -1.0);
  for (int i = 0; i < 25; ++i)
    if (i != 12) CHECK(w[i] == doctest::Approx(1.0 / 24).epsilon(1e-12));
}

TEST_CASE("project is idempotent") {
  for (uint64_t s = 0; s < 10; ++s) {
    auto w = random_bank<double>(8, 5, 100 + s);
    project_bank(w);
    auto once = w;
    project_bank(w);
    for (int64_t i = 0; i < w.numel(); ++i) CHECK(w[i] == doctest::Approx(once[i]).epsilon(1e-12));
  }
}

TEST_CASE("project is scale covariant on off-center weights") {
  auto w = random_bank<double>(4, 5, 55);
  auto scaled = w;
  for (int64_t f = 0; f < 4; ++f)
    for (int64_t i = 0; i < 25; ++i)
      if (i != 12) scaled[f * 25 + i] *= 3.75;
  project_bank(w);
  project_bank(scaled);
  for (int64_t i = 0; i < w.numel(); ++i) CHECK(scaled[i] == doctest::Approx(w[i]).epsilon(1e-12));
}

TEST_CASE("project throws on a degenerate off-center sum") {
  Tensor<double> w({1, 9});
  w.fill(0.0);
  w[0] = 1.0;
  w[1] = -1.0;  // off-center sum exactly 0
  CHECK_THROWS_AS(project_bank(w), NumericError);

  // the rescue path re-randomizes and succeeds
  Rng rng(3);
  std::vector<std::string> events;
  project_bank_rescue(w, rng, &events);
  CHECK(!events.empty());
  const auto dev = bank_deviation(w);
  CHECK(dev.max_center == 0.0);
  CHECK(dev.max_off_sum < 1e-12);
}

TEST_CASE("forward shape follows valid-convolution arithmetic") {
  const auto bank = constrained_init<float>(16, 5, 1);
  Tensor<float> input({150, 150});
  Rng rng(2);
  for (auto& v : input.data) v = static_cast<float>(rng.next_double());
  const auto out = constrained_forward(bank, input);
  CHECK(out.shape == std::vector<int64_t>{16, 146, 146});
}

TEST_CASE("projected banks annihilate constant inputs") {
  for (uint64_t s = 0; s < 5; ++s) {
    const auto bank = constrained_init<float>(16, 5, 40 + s);
    Rng rng(s);
    Tensor<float> input({40, 40});
    input.fill(static_cast<float>(rng.next_double()));
    const auto out = constrained_forward(bank, input);
    for (int64_t i = 0; i < out.numel(); ++i) CHECK(std::abs(out[i]) < 1e-4f);
  }
}

TEST_CASE("symmetric filters predict linear ramps exactly") {
  // uniform off-center weights are symmetric; response on a plane is zero
  Tensor<float> bank({1, 25});
  bank.fill(1.0f);
  project_bank(bank);
  Tensor<float> input({30, 30});
  for (int r = 0; r < 30; ++r)
    for (int c = 0; c < 30; ++c)
      input[r * 30 + c] = 0.01f * static_cast<float>(r) + 0.02f * static_cast<float>(c) + 0.1f;
  const auto out = constrained_forward(bank, input);
  for (int64_t i = 0; i < out.numel(); ++i) CHECK(std::abs(out[i]) < 1e-5f);
}

TEST_CASE("constrained forward is linear in the input") {
  const auto bank = constrained_init<float>(8, 5, 77);
  Rng rng(5);
  Tensor<float> x({20, 20}), y({20, 20}), mix({20, 20});
  for (int64_t i = 0; i < x.numel(); ++i) {
    x[i] = static_cast<float>(rng.next_double());
    y[i] = static_cast<float>(rng.next_double());
    mix[i] = 0.7f * x[i] + 1.3f * y[i];
  }
  const auto fx = constrained_forward(bank, x);
  const auto fy = constrained_forward(bank, y);
  const auto fmix = constrained_forward(bank, mix);
  for (int64_t i = 0; i < fmix.numel(); ++i)
    CHECK(fmix[i] == doctest::Approx(0.7f * fx[i] + 1.3f * fy[i]).epsilon(2e-4));
}
