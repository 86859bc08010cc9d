#pragma once

#include <cstdint>
#include <vector>

#include "ipdp/nn/config.hpp"
#include "ipdp/nn/constrained.hpp"
#include "ipdp/nn/layers.hpp"

namespace ipdp {

// One feature tower: constrained conv -> conv+BN+ReLU -> pool ->
// conv+BN+ReLU -> pool -> three sigmoid FC layers (dropout at train time).
// The siamese framework runs both patches of a pair through this single
// object, which is what weight sharing means here.
template <typename T>
struct Tower {
  ArchConfig cfg;

  Conv<T> conv1;  // constrained, no bias
  Conv<T> conv2, conv3;
  BatchNorm<T> bn2, bn3;
  MaxPool<T> pool1, pool2;
  Dense<T> fc1, fc2, fc3;

  // forward activations (kept for backward)
  Tensor<T> a1, z2, y2, r2, p1, z3, y3, r3, p2;
  Tensor<T> h1, s1, d1, h2, s2, d2, h3, s3, f;
  Tensor<T> x_in;
  bool last_train = false;
  uint64_t last_dropout_seed = 0;

  // backward scratch
  Tensor<T> g_flat, g_p2, g_r3, g_y3, g_z3, g_p1, g_r2, g_y2, g_z2, g_a1;
  Tensor<T> g_h1, g_s1, g_d1, g_h2, g_s2, g_d2, g_h3, g_s3;

  void configure(const ArchConfig& c) {
    cfg = c;
    cfg.validate();
    conv1.configure(1, cfg.k1_filters, cfg.k1_size, 1, /*bias=*/false);
    conv2.configure(cfg.k1_filters, cfg.conv2_filters, cfg.conv2_size, cfg.conv2_stride, true);
    bn2.configure(cfg.conv2_filters);
    pool1.configure(cfg.pool1_size, cfg.pool1_stride);
    conv3.configure(cfg.conv2_filters, cfg.conv3_filters, cfg.conv3_size, cfg.conv3_stride, true);
    bn3.configure(cfg.conv3_filters);
    pool2.configure(cfg.pool2_size, cfg.pool2_stride);
    fc1.configure(cfg.flatten_dim(), cfg.fc1);
    fc2.configure(cfg.fc1, cfg.fc2);
    fc3.configure(cfg.fc2, cfg.feature_dim);
  }

  void init(uint64_t seed) {
    Rng rng(seed);
    conv1.w = constrained_init<T>(cfg.k1_filters, cfg.k1_size, rng.next_u64());
    conv2.init_glorot(rng);
    conv3.init_glorot(rng);
    fc1.init_glorot(rng);
    fc2.init_glorot(rng);
    fc3.init_glorot(rng);
  }

  // x: {B,1,patch,patch} scaled to [0,1]. Returns features {B, feature_dim},
  // each entry in (0,1) in eval mode.
  const Tensor<T>& forward(const Tensor<T>& x, bool train, uint64_t dropout_seed) {
    last_train = train;
    last_dropout_seed = dropout_seed;
    x_in = x;
    conv1.forward(x, a1);  // signed prediction error: no bias, no activation
    conv2.forward(a1, z2);
    bn2.forward(z2, y2, train);
    r2 = Conv<T>::ensure(std::move(r2), y2.shape);
    nn_par::relu_forward(y2.ptr(), r2.ptr(), y2.numel());
    pool1.forward(r2, p1);
    conv3.forward(p1, z3);
    bn3.forward(z3, y3, train);
    r3 = Conv<T>::ensure(std::move(r3), y3.shape);
    nn_par::relu_forward(y3.ptr(), r3.ptr(), y3.numel());
    pool2.forward(r3, p2);

    const int64_t B = x.shape[0];
    Tensor<T> flat = p2;
    flat.shape = {B, cfg.flatten_dim()};

    fc1.forward(flat, h1);
    s1 = Conv<T>::ensure(std::move(s1), h1.shape);
    nn_par::sigmoid_forward(h1.ptr(), s1.ptr(), h1.numel());
    d1 = Conv<T>::ensure(std::move(d1), s1.shape);
    apply_dropout(s1, d1, train, dropout_seed, 1);

    fc2.forward(d1, h2);
    s2 = Conv<T>::ensure(std::move(s2), h2.shape);
    nn_par::sigmoid_forward(h2.ptr(), s2.ptr(), h2.numel());
    d2 = Conv<T>::ensure(std::move(d2), s2.shape);
    apply_dropout(s2, d2, train, dropout_seed, 2);

    fc3.forward(d2, h3);
    s3 = Conv<T>::ensure(std::move(s3), h3.shape);
    nn_par::sigmoid_forward(h3.ptr(), s3.ptr(), h3.numel());
    f = Conv<T>::ensure(std::move(f), s3.shape);
    apply_dropout(s3, f, train, dropout_seed, 3);
    return f;
  }

  // dfeat: {B, feature_dim}. Accumulates parameter gradients.
  void backward(const Tensor<T>& dfeat) {
    const bool train = last_train;
    const int64_t B = dfeat.shape[0];

    g_s3 = Conv<T>::ensure(std::move(g_s3), s3.shape);
    backprop_dropout(dfeat, g_s3, train, last_dropout_seed, 3);
    g_h3 = Conv<T>::ensure(std::move(g_h3), h3.shape);
    nn_par::sigmoid_backward(g_s3.ptr(), s3.ptr(), g_h3.ptr(), s3.numel());
    fc3.backward(g_h3, &g_d2);

    g_s2 = Conv<T>::ensure(std::move(g_s2), s2.shape);
    backprop_dropout(g_d2, g_s2, train, last_dropout_seed, 2);
    g_h2 = Conv<T>::ensure(std::move(g_h2), h2.shape);
    nn_par::sigmoid_backward(g_s2.ptr(), s2.ptr(), g_h2.ptr(), s2.numel());
    fc2.backward(g_h2, &g_d1);

    g_s1 = Conv<T>::ensure(std::move(g_s1), s1.shape);
    backprop_dropout(g_d1, g_s1, train, last_dropout_seed, 1);
    g_h1 = Conv<T>::ensure(std::move(g_h1), h1.shape);
    nn_par::sigmoid_backward(g_s1.ptr(), s1.ptr(), g_h1.ptr(), s1.numel());
    fc1.backward(g_h1, &g_flat);

    g_p2 = g_flat;
    g_p2.shape = p2.shape;
    pool2.backward(g_p2, g_r3);
    g_y3 = Conv<T>::ensure(std::move(g_y3), r3.shape);
    nn_par::relu_backward(g_r3.ptr(), r3.ptr(), g_y3.ptr(), r3.numel());
    bn3.backward(g_y3, g_z3);
    conv3.backward(g_z3, &g_p1);

    pool1.backward(g_p1, g_r2);
    g_y2 = Conv<T>::ensure(std::move(g_y2), r2.shape);
    nn_par::relu_backward(g_r2.ptr(), r2.ptr(), g_y2.ptr(), r2.numel());
    bn2.backward(g_y2, g_z2);
    conv2.backward(g_z2, &g_a1);

    conv1.backward(g_a1, nullptr);  // input gradient never needed
    (void)B;
  }

  void zero_grads() {
    conv1.gw.zero();
    conv2.gw.zero();
    conv2.gb.zero();
    bn2.g_gamma.zero();
    bn2.g_beta.zero();
    conv3.gw.zero();
    conv3.gb.zero();
    bn3.g_gamma.zero();
    bn3.g_beta.zero();
    fc1.gw.zero();
    fc1.gb.zero();
    fc2.gw.zero();
    fc2.gb.zero();
    fc3.gw.zero();
    fc3.gb.zero();
  }

  std::vector<ParamSlot<T>> params() {
    return {
        {"conv1.w", &conv1.w, &conv1.gw},     {"conv2.w", &conv2.w, &conv2.gw},
        {"conv2.b", &conv2.b, &conv2.gb},     {"bn2.gamma", &bn2.gamma, &bn2.g_gamma},
        {"bn2.beta", &bn2.beta, &bn2.g_beta}, {"conv3.w", &conv3.w, &conv3.gw},
        {"conv3.b", &conv3.b, &conv3.gb},     {"bn3.gamma", &bn3.gamma, &bn3.g_gamma},
        {"bn3.beta", &bn3.beta, &bn3.g_beta}, {"fc1.w", &fc1.w, &fc1.gw},
        {"fc1.b", &fc1.b, &fc1.gb},           {"fc2.w", &fc2.w, &fc2.gw},
        {"fc2.b", &fc2.b, &fc2.gb},           {"fc3.w", &fc3.w, &fc3.gw},
        {"fc3.b", &fc3.b, &fc3.gb},
    };
  }

  // Non-learnable state that still belongs in checkpoints.
  std::vector<std::pair<std::string, Tensor<T>*>> state_tensors() {
    return {
        {"bn2.running_mean", &bn2.running_mean},
        {"bn2.running_var", &bn2.running_var},
        {"bn3.running_mean", &bn3.running_mean},
        {"bn3.running_var", &bn3.running_var},
    };
  }

 private:
  void apply_dropout(const Tensor<T>& x, Tensor<T>& y, bool train, uint64_t seed, int layer) {
    if (train && cfg.dropout > 0.0) {
      nn_par::dropout_forward(x.ptr(), y.ptr(), x.numel(), cfg.dropout,
                              splitmix64(seed + static_cast<uint64_t>(layer) * kGolden));
    } else {
      y.data = x.data;
    }
  }

  void backprop_dropout(const Tensor<T>& dy, Tensor<T>& dx, bool train, uint64_t seed,
                        int layer) {
    if (train && cfg.dropout > 0.0) {
      nn_par::dropout_backward(dy.ptr(), dx.ptr(), dy.numel(), cfg.dropout,
                               splitmix64(seed + static_cast<uint64_t>(layer) * kGolden));
    } else {
      dx.data = dy.data;
    }
  }
};

}  // namespace ipdp
