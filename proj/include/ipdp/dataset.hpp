#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ipdp/manifest.hpp"
#include "ipdp/patch.hpp"

namespace ipdp {

// Green channel in, optional JPEG round-trip at the given quality factor.
SourceImage ingest(const SourceImage& image, int jpeg_quality = 100, bool bypass_jpeg = false);

struct CropPatch {
  int row = 0;
  int col = 0;
  Patch patch;
};

// Non-overlapping row-major tiling from (0,0); partial border tiles are
// discarded. Returns an empty list when the image is smaller than a tile.
std::vector<CropPatch> extract_patches(const SourceImage& image, int patch_size = 150);

// Applies every spec to every extracted patch and stores the results as
// PNGs under out_dir, together with out_dir/manifest.jsonl. AWGN seeds are
// derived per patch from corpus_seed, so reruns are byte-identical.
// per_image_cap > 0 keeps only the first cap tiles of each source.
Manifest build_corpus(const std::vector<SourceImage>& sources,
                      const std::vector<ManipulationSpec>& specs, uint64_t corpus_seed,
                      const std::string& out_dir, int patch_size = 150, int per_image_cap = 0);

uint64_t derive_awgn_seed(uint64_t corpus_seed, const std::string& source_id, int row, int col);

// n_ip same-class pairs and n_dp different-class pairs over the classes
// given, restricted to patch_pool. IP class choice is uniform over classes;
// DP class pairs are uniform over ordered distinct class pairs.
std::vector<PairSample> sample_pairs(const Manifest& manifest,
                                     const std::vector<ManipKind>& classes, int64_t n_ip,
                                     int64_t n_dp,
                                     const std::vector<std::string>& patch_pool, uint64_t seed);

// IP pairs both from `target`; DP pairs pair one `target` patch with one
// patch from `others` (uniform class, uniform side).
std::vector<PairSample> class_conditional_pairs(const Manifest& manifest, ManipKind target,
                                                const std::vector<ManipKind>& others,
                                                int64_t n_ip, int64_t n_dp,
                                                const std::vector<std::string>& patch_pool,
                                                uint64_t seed);

// Crop-aligned split: the crop universe is shuffled once and partitioned,
// then each selected crop contributes its patch of every class to the
// split's pool. Keeps any one crop's content out of two different splits.
SplitPlan make_splits(const Manifest& manifest, int64_t per_class_train, int64_t per_class_val,
                      int64_t per_class_test, uint64_t seed);

// Reads stored patches by id; preload() resolves everything up front.
class PatchStore {
 public:
  PatchStore(const Manifest& manifest, std::string corpus_dir);

  const Patch& load(const std::string& patch_id);
  void preload(const std::vector<std::string>& patch_ids);
  template <typename It>
  void preload_pairs(It begin, It end) {
    std::vector<std::string> ids;
    for (It it = begin; it != end; ++it) {
      ids.push_back(it->a);
      ids.push_back(it->b);
    }
    preload(ids);
  }

 private:
  const Manifest& manifest_;
  std::string dir_;
  std::unordered_map<std::string, Patch> cache_;
};

}  // namespace ipdp
