#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ipdp/manip.hpp"

namespace ipdp {

constexpr int kManifestFormatVersion = 1;

// Provenance of one stored patch.
struct PatchRecord {
  std::string patch_id;
  std::string source_id;
  int crop_row = 0;
  int crop_col = 0;
  ManipKind klass = ManipKind::kOriginal;
  ManipulationSpec spec;
  std::string storage_ref;  // file name, relative to the corpus directory
};

struct Manifest {
  int format_version = kManifestFormatVersion;
  uint64_t corpus_seed = 0;
  int patch_size = 0;
  std::vector<PatchRecord> records;

  const PatchRecord& record(const std::string& patch_id) const;
  bool has(const std::string& patch_id) const;
  std::vector<std::string> ids_of_class(ManipKind k) const;
  std::map<ManipKind, int64_t> class_counts() const;

  void build_index() const;

 private:
  mutable std::unordered_map<std::string, size_t> index_;
};

// JSON-lines, header line first, then one record per line.
void save_manifest(const Manifest& m, const std::string& path);
Manifest load_manifest(const std::string& path);

// {a, b, label}: label 1 when identically processed.
struct PairSample {
  std::string a;
  std::string b;
  int label = 0;
};

void save_pairs(const std::vector<PairSample>& pairs, const std::string& path);
std::vector<PairSample> load_pairs(const std::string& path);

// Disjoint per-split patch-id pools.
struct SplitPlan {
  uint64_t seed = 0;
  std::vector<std::string> train_ids, val_ids, test_ids;
};

void save_splits(const SplitPlan& plan, const std::string& path);
SplitPlan load_splits(const std::string& path);

}  // namespace ipdp
