#pragma once

#include <cstdint>
#include <string>

#include "ipdp/error.hpp"
#include "ipdp/nn/kernels.hpp"

namespace ipdp {

// Tower architecture. The default mirrors the published layout:
// 150x150 in, constrained 16x5x5/1, conv 64x7x7/2 +BN+ReLU, pool 3/2,
// conv 128x3x3/1 +BN+ReLU, pool 3/2, FC 4096 -> 4096 -> 2048, all sigmoid
// with dropout 0.5 at training time. The tiny variant exists for gradient
// and overfit tests only.
struct ArchConfig {
  std::string name = "default";
  int64_t patch = 150;
  int64_t k1_filters = 16, k1_size = 5;  // constrained layer, stride 1, no bias
  int64_t conv2_filters = 64, conv2_size = 7, conv2_stride = 2;
  int64_t pool1_size = 3, pool1_stride = 2;
  int64_t conv3_filters = 128, conv3_size = 3, conv3_stride = 1;
  int64_t pool2_size = 3, pool2_stride = 2;
  int64_t fc1 = 4096, fc2 = 4096, feature_dim = 2048;
  double dropout = 0.5;

  static ArchConfig default_config() { return ArchConfig{}; }

  static ArchConfig tiny() {
    ArchConfig a;
    a.name = "tiny";
    a.patch = 16;
    a.k1_filters = 4;
    a.conv2_filters = 8;
    a.conv2_size = 3;
    a.conv2_stride = 1;
    a.pool1_size = 2;
    a.conv3_filters = 16;
    a.pool2_size = 2;
    a.fc1 = 32;
    a.fc2 = 32;
    a.feature_dim = 16;
    return a;
  }

  static ArchConfig by_name(const std::string& n) {
    if (n == "default") return default_config();
    if (n == "tiny") return tiny();
    throw ParamError("unknown architecture '" + n + "' (valid: default, tiny)");
  }

  // Valid-padding shape chain.
  int64_t d1() const { return conv_out_dim(patch, k1_size, 1); }
  int64_t d2() const { return conv_out_dim(d1(), conv2_size, conv2_stride); }
  int64_t d2p() const { return conv_out_dim(d2(), pool1_size, pool1_stride); }
  int64_t d3() const { return conv_out_dim(d2p(), conv3_size, conv3_stride); }
  int64_t d3p() const { return conv_out_dim(d3(), pool2_size, pool2_stride); }
  int64_t flatten_dim() const { return d3p() * d3p() * conv3_filters; }

  void validate() const {
    require(patch >= k1_size, "patch smaller than constrained kernel");
    require(d1() > 0 && d2() > 0 && d2p() > 0 && d3() > 0 && d3p() > 0,
            "architecture does not fit the patch size");
  }

  std::string canonical() const {
    return "patch=" + std::to_string(patch) + ";k1=" + std::to_string(k1_filters) + "x" +
           std::to_string(k1_size) + ";conv2=" + std::to_string(conv2_filters) + "x" +
           std::to_string(conv2_size) + "s" + std::to_string(conv2_stride) + ";pool1=" +
           std::to_string(pool1_size) + "s" + std::to_string(pool1_stride) + ";conv3=" +
           std::to_string(conv3_filters) + "x" + std::to_string(conv3_size) + "s" +
           std::to_string(conv3_stride) + ";pool2=" + std::to_string(pool2_size) + "s" +
           std::to_string(pool2_stride) + ";fc=" + std::to_string(fc1) + "," +
           std::to_string(fc2) + "," + std::to_string(feature_dim) +
           ";scale=unit;dropout=" + std::to_string(dropout);
  }

  uint64_t hash() const { return fnv1a64(canonical()); }

  bool operator==(const ArchConfig& o) const { return canonical() == o.canonical(); }
};

}  // namespace ipdp
