#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ipdp/error.hpp"
#include "ipdp/nn/layers.hpp"

namespace ipdp {

enum class OptimizerKind { kSgdMomentum, kNadam };

inline const char* optimizer_name(OptimizerKind k) {
  return k == OptimizerKind::kSgdMomentum ? "SGD_MOMENTUM" : "NADAM";
}
inline OptimizerKind optimizer_from_name(const std::string& s) {
  if (s == "SGD_MOMENTUM" || s == "sgd_momentum") return OptimizerKind::kSgdMomentum;
  if (s == "NADAM" || s == "nadam") return OptimizerKind::kNadam;
  throw ParamError("unknown optimizer '" + s + "' (valid: SGD_MOMENTUM, NADAM)");
}

// Inverse-time schedule: lr_t = lr / (1 + decay * t), t counted from 0.
template <typename T>
T effective_lr(T base, T decay, int64_t iteration) {
  return base / (T(1) + decay * static_cast<T>(iteration));
}

template <typename T>
void check_finite(const Tensor<T>& g, const std::string& name) {
  bool bad = false;
  const int64_t n = g.numel();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i)
    if (!std::isfinite(g[i])) bad = true;
  if (bad) throw NumericError("non-finite gradient in " + name);
}

// Heavy-ball update with coupled weight decay:
//   dw <- mu*dw - lr*g - lambda*w ;  w <- w + dw
template <typename T>
struct SgdMomentum {
  std::vector<Tensor<T>> velocity;

  void attach(const std::vector<ParamSlot<T>>& slots) {
    velocity.clear();
    for (const auto& s : slots) velocity.emplace_back(s.value->shape);
  }

  void step(const std::vector<ParamSlot<T>>& slots, T lr, T mu, T lambda) {
    for (size_t k = 0; k < slots.size(); ++k) {
      check_finite(*slots[k].grad, slots[k].name);
      Tensor<T>& w = *slots[k].value;
      const Tensor<T>& g = *slots[k].grad;
      Tensor<T>& v = velocity[k];
      const int64_t n = w.numel();
#pragma omp parallel for schedule(static)
      for (int64_t i = 0; i < n; ++i) {
        v[i] = mu * v[i] - lr * g[i] - lambda * w[i];
        w[i] += v[i];
      }
    }
  }
};

// Nesterov-Adam. With constant beta1 the momentum-schedule products reduce
// to powers, giving for step t (1-based):
//   m <- b1*m + (1-b1)*g            v <- b2*v + (1-b2)*g^2
//   mbar = (1-b1)*g/(1-b1^t) + b1*m/(1-b1^(t+1))
//   w <- w - lr * mbar / (sqrt(v/(1-b2^t)) + eps) - lambda*w
// Weight decay is decoupled from the adaptive step, matching the
// SGD rule's plain -lambda*w contribution.
template <typename T>
struct Nadam {
  T beta1 = static_cast<T>(0.9);
  T beta2 = static_cast<T>(0.999);
  T eps = static_cast<T>(1e-8);
  int64_t t = 0;
  std::vector<Tensor<T>> m, v;

  void attach(const std::vector<ParamSlot<T>>& slots) {
    m.clear();
    v.clear();
    t = 0;
    for (const auto& s : slots) {
      m.emplace_back(s.value->shape);
      v.emplace_back(s.value->shape);
    }
  }

  void step(const std::vector<ParamSlot<T>>& slots, T lr, T lambda) {
    ++t;
    const T bc1 = T(1) - std::pow(beta1, static_cast<T>(t));
    const T bc1_next = T(1) - std::pow(beta1, static_cast<T>(t + 1));
    const T bc2 = T(1) - std::pow(beta2, static_cast<T>(t));
    for (size_t k = 0; k < slots.size(); ++k) {
      check_finite(*slots[k].grad, slots[k].name);
      Tensor<T>& w = *slots[k].value;
      const Tensor<T>& g = *slots[k].grad;
      Tensor<T>& mk = m[k];
      Tensor<T>& vk = v[k];
      const int64_t n = w.numel();
#pragma omp parallel for schedule(static)
      for (int64_t i = 0; i < n; ++i) {
        mk[i] = beta1 * mk[i] + (T(1) - beta1) * g[i];
        vk[i] = beta2 * vk[i] + (T(1) - beta2) * g[i] * g[i];
        const T mbar = (T(1) - beta1) * g[i] / bc1 + beta1 * mk[i] / bc1_next;
        const T nhat = vk[i] / bc2;
        w[i] -= lr * mbar / (std::sqrt(nhat) + eps) + lambda * w[i];
      }
    }
  }
};

}  // namespace ipdp
