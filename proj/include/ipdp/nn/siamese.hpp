#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ipdp/nn/tower.hpp"
#include "ipdp/patch.hpp"

namespace ipdp {

// Binary cross-entropy with the probability clamped away from {0,1}.
// Label semantics: y=1 for identically processed pairs.
template <typename T>
T bce_loss(T p, T y) {
  const T eps = static_cast<T>(1e-7);
  const T pc = std::min(std::max(p, eps), T(1) - eps);
  return -(y * std::log(pc) + (T(1) - y) * std::log(T(1) - pc));
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

// Weighted-L1 distance head: p = sigmoid(sum_j alpha_j |f1(j) - f2(j)|).
template <typename T>
T distance_head(const T* f1, const T* f2, const T* alpha, int64_t n) {
  T s = 0;
  for (int64_t j = 0; j < n; ++j) s += alpha[j] * std::abs(f1[j] - f2[j]);
  return sigmoid(s);
}

inline bool predict_ip(double p, double threshold = 0.5) { return p >= threshold; }

// The full pairwise model: one shared tower plus the distance head weights.
template <typename T>
struct SiameseModel {
  Tower<T> tower;
  Tensor<T> alpha, g_alpha;

  // caches from forward_pairs
  Tensor<T> dist;   // {B, F} |f1-f2|
  Tensor<T> signs;  // {B, F} sign(f1-f2)
  std::vector<T> probs;

  void configure(const ArchConfig& cfg) {
    tower.configure(cfg);
    alpha = Tensor<T>({cfg.feature_dim});
    alpha.fill(T(1));  // starts as plain L1 distance
    g_alpha = Tensor<T>({cfg.feature_dim});
  }

  void init(uint64_t seed) {
    tower.init(seed);
    alpha.fill(T(1));
  }

  const ArchConfig& cfg() const { return tower.cfg; }

  std::vector<ParamSlot<T>> params() {
    auto ps = tower.params();
    ps.push_back({"head.alpha", &alpha, &g_alpha});
    return ps;
  }

  void zero_grads() {
    tower.zero_grads();
    g_alpha.zero();
  }

  // x holds both sides of B pairs: rows [0,B) are the first patches,
  // rows [B,2B) the second. One tower pass covers both branches.
  const std::vector<T>& forward_pairs(const Tensor<T>& x, bool train, uint64_t dropout_seed) {
    const int64_t B2 = x.shape[0];
    const int64_t B = B2 / 2;
    const Tensor<T>& f = tower.forward(x, train, dropout_seed);
    const int64_t F = cfg().feature_dim;
    dist = Conv<T>::ensure(std::move(dist), {B, F});
    signs = Conv<T>::ensure(std::move(signs), {B, F});
    probs.assign(static_cast<size_t>(B), T(0));
    const T* fp = f.ptr();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < B; ++i) {
      const T* f1 = fp + i * F;
      const T* f2 = fp + (B + i) * F;
      T s = 0;
      for (int64_t j = 0; j < F; ++j) {
        const T d = f1[j] - f2[j];
        const T ad = std::abs(d);
        dist[i * F + j] = ad;
        signs[i * F + j] = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
        s += alpha[j] * ad;
      }
      probs[static_cast<size_t>(i)] = sigmoid(s);
    }
    return probs;
  }

  // Mean BCE over the batch; accumulates all gradients (alpha and tower).
  T backward_pairs(const std::vector<T>& labels) {
    const int64_t B = static_cast<int64_t>(probs.size());
    const int64_t F = cfg().feature_dim;
    T loss = 0;
    std::vector<T> dls(static_cast<size_t>(B));
    for (int64_t i = 0; i < B; ++i) {
      loss += bce_loss(probs[static_cast<size_t>(i)], labels[static_cast<size_t>(i)]);
      // d(mean loss)/ds_i for sigmoid+BCE
      dls[static_cast<size_t>(i)] =
          (probs[static_cast<size_t>(i)] - labels[static_cast<size_t>(i)]) / static_cast<T>(B);
    }
    loss /= static_cast<T>(B);

#pragma omp parallel for schedule(static)
    for (int64_t j = 0; j < F; ++j) {
      T g = 0;
      for (int64_t i = 0; i < B; ++i) g += dls[static_cast<size_t>(i)] * dist[i * F + j];
      g_alpha[j] += g;
    }

    Tensor<T> dfeat({2 * B, F});
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < B; ++i) {
      const T dl = dls[static_cast<size_t>(i)];
      for (int64_t j = 0; j < F; ++j) {
        const T g = dl * alpha[j] * signs[i * F + j];
        dfeat[i * F + j] = g;
        dfeat[(B + i) * F + j] = -g;
      }
    }
    tower.backward(dfeat);
    return loss;
  }

  // Eval-mode features for a batch of patches: {B,1,P,P} -> {B,F}.
  Tensor<T> features(const Tensor<T>& x) {
    Tensor<T> out = tower.forward(x, /*train=*/false, /*dropout_seed=*/0);
    return out;
  }

  // Eval-mode probability for one precomputed feature pair.
  T probability(const T* f1, const T* f2) const {
    return distance_head(f1, f2, alpha.ptr(), cfg().feature_dim);
  }
};

// Scale a batch of patches into the network input tensor {B,1,P,P}.
template <typename T>
void load_patches(const std::vector<const Patch*>& patches, Tensor<T>& x) {
  const int64_t B = static_cast<int64_t>(patches.size());
  const int64_t P = patches.empty() ? 0 : patches[0]->height;
  x = Conv<T>::ensure(std::move(x), {B, 1, P, P});
  for (int64_t i = 0; i < B; ++i) {
    require(patches[i]->height == P && patches[i]->width == P,
            "all patches in a batch must share the configured size");
    nn_par::scale_to_unit(patches[i]->pixels.data(), x.ptr() + i * P * P, P * P);
  }
}

}  // namespace ipdp
