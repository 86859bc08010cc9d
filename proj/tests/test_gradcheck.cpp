#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ipdp/nn/siamese.hpp"
#include "ipdp/rng.hpp"

using namespace ipdp;

namespace {

Patch random_patch(int size, uint64_t seed) {
  Patch p(size, size);
  Rng rng(seed);
  for (auto& v : p.pixels) v = static_cast<uint8_t>(rng.next_below(256));
  return p;
}

double loss_at(SiameseModel<double>& m, const Tensor<double>& x, const std::vector<double>& y,
               bool train, uint64_t dropout_seed) {
  const auto& probs = m.forward_pairs(x, train, dropout_seed);
  double loss = 0;
  for (size_t i = 0; i < probs.size(); ++i) loss += bce_loss(probs[i], y[i]);
  return loss / static_cast<double>(probs.size());
}

// Central finite differences over every parameter of every group, compared
// at rtol 1e-3. Returns max relative error per group.
std::map<std::string, double> run_gradcheck(bool train, bool with_dropout) {
  ArchConfig cfg = ArchConfig::tiny();
  if (!with_dropout) cfg.dropout = 0.0;
  SiameseModel<double> m;
  m.configure(cfg);
  m.init(21);

  const Patch pa = random_patch(16, 333);
  const Patch pc = random_patch(16, 335), pd = random_patch(16, 336);
  Tensor<double> x;
  load_patches({&pa, &pc, &pa, &pd}, x);  // pair 1: (pa,pa) IP, pair 2: (pc,pd) DP
  const std::vector<double> labels{1.0, 0.0};
  const uint64_t dropout_seed = 77;

  // move BN running statistics off their initial values, then freeze
  for (uint64_t w = 0; w < 3; ++w) {
    Tensor<double> warm;
    const Patch w1 = random_patch(16, 400 + w), w2 = random_patch(16, 500 + w);
    load_patches({&w1, &w2, &w2, &w1}, warm);
    m.forward_pairs(warm, /*train=*/true, 0);
  }

  loss_at(m, x, labels, train, dropout_seed);
  // central differences step over |f1-f2| kinks when a feature distance
  // sits within reach of h; this fixture must keep clear of them
  double min_dist = 1e18;
  for (int64_t j = 0; j < m.cfg().feature_dim; ++j) {
    const double d = m.dist[m.cfg().feature_dim + j];
    if (d > 0 && d < min_dist) min_dist = d;
  }
  REQUIRE(min_dist > 5e-4);
  m.zero_grads();
  m.backward_pairs(labels);
  std::map<std::string, Tensor<double>> analytic;
  for (auto& s : m.params()) analytic.emplace(s.name, *s.grad);

  const double h = 1e-4;
  std::map<std::string, double> worst;
  for (auto& s : m.params()) {
    double group_worst = 0;
    Tensor<double>& v = *s.value;
    for (int64_t i = 0; i < v.numel(); ++i) {
      const double saved = v[i];
      v[i] = saved + h;
      const double lp = loss_at(m, x, labels, train, dropout_seed);
      v[i] = saved - h;
      const double lm = loss_at(m, x, labels, train, dropout_seed);
      v[i] = saved;
      const double numeric = (lp - lm) / (2 * h);
      const double exact = analytic.at(s.name)[i];
      const double denom = std::max({std::abs(numeric), std::abs(exact), 1e-6});
      group_worst = std::max(group_worst, std::abs(numeric - exact) / denom);
    }
    worst[s.name] = group_worst;
  }
  return worst;
}

}  // namespace

TEST_CASE("analytic gradients match finite differences (eval-mode BN, no dropout)") {
  const auto worst = run_gradcheck(/*train=*/false, /*with_dropout=*/false);
  for (const auto& [name, err] : worst) {
    INFO("group ", name, " rel err ", err);
    CHECK(err < 1e-3);
  }
  // every group must actually be present
  CHECK(worst.count("conv1.w") == 1);
  CHECK(worst.count("head.alpha") == 1);
  CHECK(worst.count("bn2.gamma") == 1);
  CHECK(worst.count("fc3.w") == 1);
}

TEST_CASE("analytic gradients match finite differences (train-mode BN)") {
  const auto worst = run_gradcheck(/*train=*/true, /*with_dropout=*/false);
  for (const auto& [name, err] : worst) {
    INFO("group ", name, " rel err ", err);
    CHECK(err < 1e-3);
  }
}

TEST_CASE("analytic gradients match finite differences (train mode with fixed dropout)") {
  const auto worst = run_gradcheck(/*train=*/true, /*with_dropout=*/true);
  for (const auto& [name, err] : worst) {
    INFO("group ", name, " rel err ", err);
    CHECK(err < 1e-3);
  }
}
