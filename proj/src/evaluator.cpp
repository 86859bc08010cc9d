#include "ipdp/eval/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

namespace ipdp {

using nlohmann::json;

std::string report_to_json(const EvalReport& r) {
  json j;
  j["n_pairs"] = r.n_pairs;
  j["accuracy"] = r.accuracy;
  j["threshold"] = r.threshold;
  j["confusion"] = {{"true_ip_pred_ip", r.tp},
                    {"true_ip_pred_dp", r.fn},
                    {"true_dp_pred_ip", r.fp},
                    {"true_dp_pred_dp", r.tn}};
  if (!r.per_class.empty()) j["per_class"] = r.per_class;
  return j.dump(2);
}

PairScorer::PairScorer(SiameseModel<float>& model, PatchStore& store, int64_t batch_size)
    : model_(model), store_(store), batch_(batch_size) {}

void PairScorer::reset() { features_.clear(); }

void PairScorer::warm(const std::vector<PairSample>& pairs) {
  std::set<std::string> want;
  for (const auto& p : pairs) {
    if (!features_.count(p.a)) want.insert(p.a);
    if (!features_.count(p.b)) want.insert(p.b);
  }
  std::vector<std::string> ids(want.begin(), want.end());
  const int64_t F = model_.cfg().feature_dim;
  Tensor<float> x;
  for (size_t at = 0; at < ids.size(); at += static_cast<size_t>(batch_)) {
    const size_t count = std::min(static_cast<size_t>(batch_), ids.size() - at);
    std::vector<const Patch*> patches(count);
    for (size_t i = 0; i < count; ++i) patches[i] = &store_.load(ids[at + i]);
    load_patches(patches, x);
    Tensor<float> f = model_.features(x);
    for (size_t i = 0; i < count; ++i) {
      std::vector<float> row(f.ptr() + static_cast<int64_t>(i) * F,
                             f.ptr() + static_cast<int64_t>(i + 1) * F);
      features_.emplace(ids[at + i], std::move(row));
    }
  }
}

const float* PairScorer::feature(const std::string& patch_id) {
  auto it = features_.find(patch_id);
  if (it == features_.end()) {
    warm({PairSample{patch_id, patch_id, 1}});
    it = features_.find(patch_id);
  }
  return it->second.data();
}

double PairScorer::probability(const std::string& a, const std::string& b) {
  const float* fa = feature(a);
  const float* fb = feature(b);
  return static_cast<double>(model_.probability(fa, fb));
}

EvalReport evaluate(SiameseModel<float>& model, PatchStore& store,
                    const std::vector<PairSample>& pairs, double threshold) {
  require(threshold > 0.0 && threshold < 1.0, "threshold must be in (0,1)");
  store.preload_pairs(pairs.begin(), pairs.end());
  PairScorer scorer(model, store);
  scorer.warm(pairs);
  EvalReport r;
  r.threshold = threshold;
  r.n_pairs = static_cast<int64_t>(pairs.size());
  for (const auto& p : pairs) {
    const double prob = scorer.probability(p.a, p.b);
    const bool pred_ip = predict_ip(prob, threshold);
    if (p.label == 1) {
      pred_ip ? ++r.tp : ++r.fn;
    } else {
      pred_ip ? ++r.fp : ++r.tn;
    }
  }
  r.accuracy = r.n_pairs == 0 ? 0.0
                              : static_cast<double>(r.tp + r.tn) / static_cast<double>(r.n_pairs);
  return r;
}

EvalReport per_class_eval(SiameseModel<float>& model, PatchStore& store,
                          const Manifest& manifest, ManipKind target,
                          const std::vector<ManipKind>& others, int64_t n_ip, int64_t n_dp,
                          const std::vector<std::string>& patch_pool, uint64_t seed,
                          double threshold) {
  const auto pairs =
      class_conditional_pairs(manifest, target, others, n_ip, n_dp, patch_pool, seed);
  EvalReport r = evaluate(model, store, pairs, threshold);
  r.per_class[manip_kind_name(target)] = r.accuracy;
  return r;
}

EvalReport generalization_eval(SiameseModel<float>& model,
                               const std::vector<std::string>& checkpoint_classes,
                               PatchStore& store, const Manifest& manifest, ManipKind unseen,
                               const std::vector<ManipKind>& trained, int64_t n_ip, int64_t n_dp,
                               const std::vector<std::string>& patch_pool, uint64_t seed,
                               double threshold) {
  const std::string unseen_name = manip_kind_name(unseen);
  for (const auto& c : checkpoint_classes)
    if (c == unseen_name)
      throw ProtocolError("generalization protocol violated: class '" + unseen_name +
                          "' was present in the training stage");
  return per_class_eval(model, store, manifest, unseen, trained, n_ip, n_dp, patch_pool, seed,
                        threshold);
}

ConsistencyMap consistency_map(SiameseModel<float>& model, const SourceImage& image,
                               int patch_size) {
  const auto crops = extract_patches(image, patch_size);
  if (crops.size() < 2)
    throw ProtocolError("consistency map needs an image tileable into at least 2 patches");
  const int grid_cols = image.pixels.width / patch_size;
  const int grid_rows = image.pixels.height / patch_size;

  const int64_t F = model.cfg().feature_dim;
  const int n = static_cast<int>(crops.size());
  std::vector<std::vector<float>> feats(static_cast<size_t>(n));
  Tensor<float> x;
  const int64_t batch = 16;
  for (int at = 0; at < n; at += static_cast<int>(batch)) {
    const int count = std::min(static_cast<int>(batch), n - at);
    std::vector<const Patch*> patches(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) patches[static_cast<size_t>(i)] = &crops[static_cast<size_t>(at + i)].patch;
    load_patches(patches, x);
    Tensor<float> f = model.features(x);
    for (int i = 0; i < count; ++i)
      feats[static_cast<size_t>(at + i)] =
          std::vector<float>(f.ptr() + static_cast<int64_t>(i) * F,
                             f.ptr() + static_cast<int64_t>(i + 1) * F);
  }

  ConsistencyMap m;
  m.grid_rows = grid_rows;
  m.grid_cols = grid_cols;
  m.matrix.assign(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      m.matrix[static_cast<size_t>(i) * n + j] = static_cast<double>(
          model.probability(feats[static_cast<size_t>(i)].data(), feats[static_cast<size_t>(j)].data()));
  return m;
}

std::string consistency_to_json(const ConsistencyMap& m) {
  json j;
  j["grid_rows"] = m.grid_rows;
  j["grid_cols"] = m.grid_cols;
  json rows = json::array();
  const int n = m.n();
  for (int i = 0; i < n; ++i) {
    json row = json::array();
    for (int jj = 0; jj < n; ++jj) row.push_back(m.at(i, jj));
    rows.push_back(row);
  }
  j["pairwise_ip_probability"] = rows;
  return j.dump();
}

Gray8 consistency_heatmap(const ConsistencyMap& m, int cell) {
  const int n = m.n();
  Gray8 img(n * cell, n * cell);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const uint8_t v = quantize_u8(255.0 * m.at(i, j));
      for (int r = 0; r < cell; ++r)
        for (int c = 0; c < cell; ++c) img.at(i * cell + r, j * cell + c) = v;
    }
  return img;
}

}  // namespace ipdp
