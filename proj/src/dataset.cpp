#include "ipdp/dataset.hpp"

#include <omp.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "ipdp/error.hpp"
#include "ipdp/image_io.hpp"
#include "ipdp/rng.hpp"

namespace fs = std::filesystem;

namespace ipdp {

SourceImage ingest(const SourceImage& image, int jpeg_quality, bool bypass_jpeg) {
  require(jpeg_quality >= 1 && jpeg_quality <= 100, "jpeg quality must be in [1,100]");
  if (image.pixels.empty()) throw IoError("ingest: empty source image " + image.id);
  SourceImage out = image;
  if (!bypass_jpeg) out.pixels = jpeg_roundtrip(image.pixels, jpeg_quality);
  return out;
}

std::vector<CropPatch> extract_patches(const SourceImage& image, int patch_size) {
  require(patch_size > 0, "patch_size must be positive");
  std::vector<CropPatch> out;
  const int rows = image.pixels.height / patch_size;
  const int cols = image.pixels.width / patch_size;
  if (rows <= 0 || cols <= 0) return out;
  out.reserve(static_cast<size_t>(rows) * cols);
  for (int tr = 0; tr < rows; ++tr) {
    for (int tc = 0; tc < cols; ++tc) {
      CropPatch cp;
      cp.row = tr * patch_size;
      cp.col = tc * patch_size;
      cp.patch = Patch(patch_size, patch_size);
      for (int r = 0; r < patch_size; ++r) {
        const uint8_t* src =
            image.pixels.pixels.data() +
            (static_cast<size_t>(cp.row + r) * image.pixels.width + cp.col);
        std::copy(src, src + patch_size,
                  cp.patch.pixels.begin() + static_cast<size_t>(r) * patch_size);
      }
      out.push_back(std::move(cp));
    }
  }
  return out;
}

uint64_t derive_awgn_seed(uint64_t corpus_seed, const std::string& source_id, int row, int col) {
  const std::string uid =
      source_id + ":" + std::to_string(row) + ":" + std::to_string(col);
  return splitmix64(corpus_seed ^ fnv1a64(uid));
}

Manifest build_corpus(const std::vector<SourceImage>& sources,
                      const std::vector<ManipulationSpec>& specs, uint64_t corpus_seed,
                      const std::string& out_dir, int patch_size, int per_image_cap) {
  require(!sources.empty(), "no source images");
  require(!specs.empty(), "no manipulation specs");
  bool has_original = false;
  for (const auto& s : specs) {
    s.validate();
    has_original = has_original || s.kind == ManipKind::kOriginal;
  }
  require(has_original, "specs must include the original (unaltered) class");

  fs::create_directories(out_dir);

  struct WorkItem {
    const SourceImage* source;
    CropPatch crop;
  };
  std::vector<WorkItem> items;
  std::vector<std::vector<CropPatch>> all_crops(sources.size());
  for (size_t si = 0; si < sources.size(); ++si) {
    auto crops = extract_patches(sources[si], patch_size);
    if (per_image_cap > 0 && static_cast<int>(crops.size()) > per_image_cap)
      crops.resize(static_cast<size_t>(per_image_cap));
    for (auto& c : crops) items.push_back({&sources[si], std::move(c)});
  }

  Manifest manifest;
  manifest.corpus_seed = corpus_seed;
  manifest.patch_size = patch_size;

  // Records are laid out up front in deterministic order; pixel work and
  // file writes then run in parallel over unaltered patches.
  for (const auto& item : items) {
    for (const auto& base_spec : specs) {
      PatchRecord r;
      r.source_id = item.source->id;
      r.crop_row = item.crop.row;
      r.crop_col = item.crop.col;
      r.klass = base_spec.kind;
      r.spec = base_spec;
      if (r.spec.kind == ManipKind::kAwgn)
        r.spec.rng_seed = derive_awgn_seed(corpus_seed, r.source_id, r.crop_row, r.crop_col);
      r.patch_id = r.source_id + "_r" + std::to_string(r.crop_row) + "_c" +
                   std::to_string(r.crop_col) + "_" + manip_kind_name(r.klass);
      r.storage_ref = r.patch_id + ".png";
      manifest.records.push_back(std::move(r));
    }
  }

  const int64_t n_items = static_cast<int64_t>(items.size());
  const int64_t n_specs = static_cast<int64_t>(specs.size());
  std::vector<std::string> failures;
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < n_items; ++i) {
    for (int64_t s = 0; s < n_specs; ++s) {
      const PatchRecord& r = manifest.records[static_cast<size_t>(i * n_specs + s)];
      try {
        const Patch manipulated = apply(r.spec, items[static_cast<size_t>(i)].crop.patch);
        save_png(manipulated, (fs::path(out_dir) / r.storage_ref).string());
      } catch (const std::exception& e) {
#pragma omp critical
        failures.push_back(r.patch_id + ": " + e.what());
      }
    }
  }

  if (!failures.empty()) {
    // partial-output cleanup: a corpus is all-or-nothing
    for (const auto& r : manifest.records) {
      std::error_code ec;
      fs::remove(fs::path(out_dir) / r.storage_ref, ec);
    }
    throw IoError("corpus synthesis failed for " + std::to_string(failures.size()) +
                  " patches, first: " + failures.front());
  }

  save_manifest(manifest, (fs::path(out_dir) / "manifest.jsonl").string());
  return manifest;
}

namespace {

// Per-class id pools restricted to patch_pool, in manifest order.
std::vector<std::vector<std::string>> class_pools(const Manifest& manifest,
                                                  const std::vector<ManipKind>& classes,
                                                  const std::vector<std::string>& patch_pool,
                                                  int64_t min_each) {
  std::unordered_set<std::string> pool(patch_pool.begin(), patch_pool.end());
  std::vector<std::vector<std::string>> out(classes.size());
  for (const auto& r : manifest.records) {
    if (!pool.count(r.patch_id)) continue;
    for (size_t c = 0; c < classes.size(); ++c)
      if (classes[c] == r.klass) out[c].push_back(r.patch_id);
  }
  for (size_t c = 0; c < classes.size(); ++c) {
    if (static_cast<int64_t>(out[c].size()) < min_each)
      throw DataError(std::string("insufficient pool for class ") +
                      manip_kind_name(classes[c]) + ": have " +
                      std::to_string(out[c].size()) + ", need >= " + std::to_string(min_each));
  }
  return out;
}

// Two distinct indices in [0, n).
std::pair<size_t, size_t> draw_distinct(Rng& rng, size_t n) {
  const size_t i = static_cast<size_t>(rng.next_below(n));
  size_t j = static_cast<size_t>(rng.next_below(n - 1));
  if (j >= i) ++j;
  return {i, j};
}

}  // namespace

std::vector<PairSample> sample_pairs(const Manifest& manifest,
                                     const std::vector<ManipKind>& classes, int64_t n_ip,
                                     int64_t n_dp, const std::vector<std::string>& patch_pool,
                                     uint64_t seed) {
  require(classes.size() >= 2, "need at least two classes to form DP pairs");
  const auto pools = class_pools(manifest, classes, patch_pool, 2);
  Rng rng(seed);
  std::vector<PairSample> out;
  out.reserve(static_cast<size_t>(n_ip + n_dp));
  for (int64_t i = 0; i < n_ip; ++i) {
    const size_t c = static_cast<size_t>(rng.next_below(classes.size()));
    const auto [a, b] = draw_distinct(rng, pools[c].size());
    out.push_back({pools[c][a], pools[c][b], 1});
  }
  for (int64_t i = 0; i < n_dp; ++i) {
    const size_t c1 = static_cast<size_t>(rng.next_below(classes.size()));
    size_t c2 = static_cast<size_t>(rng.next_below(classes.size() - 1));
    if (c2 >= c1) ++c2;
    const auto& p1 = pools[c1];
    const auto& p2 = pools[c2];
    out.push_back({p1[static_cast<size_t>(rng.next_below(p1.size()))],
                   p2[static_cast<size_t>(rng.next_below(p2.size()))], 0});
  }
  return out;
}

std::vector<PairSample> class_conditional_pairs(const Manifest& manifest, ManipKind target,
                                                const std::vector<ManipKind>& others,
                                                int64_t n_ip, int64_t n_dp,
                                                const std::vector<std::string>& patch_pool,
                                                uint64_t seed) {
  require(!others.empty(), "need at least one non-target class");
  for (ManipKind o : others)
    require(o != target, "target class must not appear among the others");
  std::vector<ManipKind> all{target};
  all.insert(all.end(), others.begin(), others.end());
  const auto pools = class_pools(manifest, all, patch_pool, 2);
  const auto& target_pool = pools[0];
  Rng rng(seed);
  std::vector<PairSample> out;
  out.reserve(static_cast<size_t>(n_ip + n_dp));
  for (int64_t i = 0; i < n_ip; ++i) {
    const auto [a, b] = draw_distinct(rng, target_pool.size());
    out.push_back({target_pool[a], target_pool[b], 1});
  }
  for (int64_t i = 0; i < n_dp; ++i) {
    const size_t c = 1 + static_cast<size_t>(rng.next_below(others.size()));
    const std::string& t = target_pool[static_cast<size_t>(rng.next_below(target_pool.size()))];
    const std::string& o = pools[c][static_cast<size_t>(rng.next_below(pools[c].size()))];
    if (rng.next_below(2) == 0)
      out.push_back({t, o, 0});
    else
      out.push_back({o, t, 0});
  }
  return out;
}

SplitPlan make_splits(const Manifest& manifest, int64_t per_class_train, int64_t per_class_val,
                      int64_t per_class_test, uint64_t seed) {
  require(per_class_train >= 0 && per_class_val >= 0 && per_class_test >= 0,
          "split counts must be non-negative");

  // crop universe, first-seen order
  struct CropKey {
    std::string source_id;
    int row, col;
  };
  std::vector<CropKey> crops;
  std::unordered_map<std::string, size_t> crop_index;
  std::vector<std::vector<std::string>> crop_ids;  // per crop: ids of all classes
  for (const auto& r : manifest.records) {
    const std::string key =
        r.source_id + ":" + std::to_string(r.crop_row) + ":" + std::to_string(r.crop_col);
    auto it = crop_index.find(key);
    if (it == crop_index.end()) {
      crop_index.emplace(key, crops.size());
      crops.push_back({r.source_id, r.crop_row, r.crop_col});
      crop_ids.emplace_back();
      it = crop_index.find(key);
    }
    crop_ids[it->second].push_back(r.patch_id);
  }

  const int64_t need = per_class_train + per_class_val + per_class_test;
  if (static_cast<int64_t>(crops.size()) < need)
    throw ParamError("split oversubscribed: need " + std::to_string(need) +
                     " crops per class, corpus has " + std::to_string(crops.size()));

  std::vector<size_t> order(crops.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  SplitPlan plan;
  plan.seed = seed;
  auto take = [&](int64_t from, int64_t count, std::vector<std::string>& dst) {
    for (int64_t i = from; i < from + count; ++i)
      for (const auto& id : crop_ids[order[static_cast<size_t>(i)]]) dst.push_back(id);
  };
  take(0, per_class_train, plan.train_ids);
  take(per_class_train, per_class_val, plan.val_ids);
  take(per_class_train + per_class_val, per_class_test, plan.test_ids);
  return plan;
}

PatchStore::PatchStore(const Manifest& manifest, std::string corpus_dir)
    : manifest_(manifest), dir_(std::move(corpus_dir)) {}

const Patch& PatchStore::load(const std::string& patch_id) {
  auto it = cache_.find(patch_id);
  if (it != cache_.end()) return it->second;
  const PatchRecord& r = manifest_.record(patch_id);
  Patch p = load_png_gray((fs::path(dir_) / r.storage_ref).string());
  if (p.height != manifest_.patch_size || p.width != manifest_.patch_size)
    throw DataError("stored patch has wrong size: " + patch_id);
  auto [ins, _] = cache_.emplace(patch_id, std::move(p));
  return ins->second;
}

void PatchStore::preload(const std::vector<std::string>& patch_ids) {
  std::vector<std::string> missing;
  std::set<std::string> unique(patch_ids.begin(), patch_ids.end());
  for (const auto& id : unique) {
    try {
      load(id);
    } catch (const std::exception&) {
      missing.push_back(id);
    }
  }
  if (!missing.empty()) {
    std::string msg = "unresolvable patch refs (" + std::to_string(missing.size()) + "):";
    for (size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i];
    throw DataError(msg);
  }
}

}  // namespace ipdp
