#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ipdp/dataset.hpp"
#include "ipdp/nn/checkpoint.hpp"

namespace ipdp {

struct EvalReport {
  int64_t n_pairs = 0;
  double accuracy = 0.0;
  // rows: true IP / true DP; cols: predicted IP / predicted DP
  int64_t tp = 0, fn = 0, fp = 0, tn = 0;
  std::map<std::string, double> per_class;
  double threshold = 0.5;
};

std::string report_to_json(const EvalReport& r);

// Scores patches once each (eval mode is deterministic, so cached tower
// features are exact), then runs the distance head over the pair list.
class PairScorer {
 public:
  PairScorer(SiameseModel<float>& model, PatchStore& store, int64_t batch_size = 16);

  double probability(const std::string& a, const std::string& b);
  void warm(const std::vector<PairSample>& pairs);
  void reset();

 private:
  const float* feature(const std::string& patch_id);
  SiameseModel<float>& model_;
  PatchStore& store_;
  int64_t batch_;
  std::map<std::string, std::vector<float>> features_;
};

EvalReport evaluate(SiameseModel<float>& model, PatchStore& store,
                    const std::vector<PairSample>& pairs, double threshold = 0.5);

// Table-II style protocol: IP pairs inside `target`, DP pairs between
// `target` and the remaining classes, drawn from patch_pool.
EvalReport per_class_eval(SiameseModel<float>& model, PatchStore& store,
                          const Manifest& manifest, ManipKind target,
                          const std::vector<ManipKind>& others, int64_t n_ip, int64_t n_dp,
                          const std::vector<std::string>& patch_pool, uint64_t seed,
                          double threshold = 0.5);

// Table-III style protocol. Refuses to run when `unseen` appears among the
// training classes recorded in the checkpoint metadata.
EvalReport generalization_eval(SiameseModel<float>& model,
                               const std::vector<std::string>& checkpoint_classes,
                               PatchStore& store, const Manifest& manifest, ManipKind unseen,
                               const std::vector<ManipKind>& trained, int64_t n_ip, int64_t n_dp,
                               const std::vector<std::string>& patch_pool, uint64_t seed,
                               double threshold = 0.5);

// Pairwise IP probabilities over all tiles of one image. Symmetric, 0.5 on
// the diagonal.
struct ConsistencyMap {
  int grid_rows = 0, grid_cols = 0;
  std::vector<double> matrix;  // (grid_rows*grid_cols)^2

  double at(int i, int j) const { return matrix[static_cast<size_t>(i) * n() + j]; }
  int n() const { return grid_rows * grid_cols; }
};

ConsistencyMap consistency_map(SiameseModel<float>& model, const SourceImage& image,
                               int patch_size);

std::string consistency_to_json(const ConsistencyMap& m);
// Grayscale heatmap (probability 0..1 -> intensity 0..255), one pixel per
// patch pair, upscaled by `cell`.
Gray8 consistency_heatmap(const ConsistencyMap& m, int cell = 4);

}  // namespace ipdp
