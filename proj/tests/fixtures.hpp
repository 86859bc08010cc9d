#pragma once

// Shared corpus fixtures for trainer/evaluator/CLI tests: a small patch-16
// corpus synthesized from generated source images.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ipdp/dataset.hpp"
#include "ipdp/rng.hpp"
#include "ipdp/synthetic.hpp"

namespace ipdp::testfix {

inline std::filesystem::path fresh_dir(const std::string& tag) {
  const auto p = std::filesystem::temp_directory_path() / ("ipdp_fix_" + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct TinyCorpus {
  std::filesystem::path dir;
  Manifest manifest;
  SplitPlan splits;
};

// n_sources 64x64 images -> 16 crops each at patch 16, all six classes.
inline TinyCorpus make_tiny_corpus(const std::string& tag, int n_sources = 4,
                                   uint64_t seed = 11) {
  TinyCorpus out;
  out.dir = fresh_dir(tag);
  std::vector<SourceImage> sources;
  for (int i = 0; i < n_sources; ++i) {
    SourceImage s;
    s.id = "src" + std::to_string(i);
    s.pixels = make_synthetic_source(splitmix64(seed + static_cast<uint64_t>(i)), 64, 64);
    sources.push_back(ingest(s, 100));
  }
  std::vector<ManipulationSpec> specs;
  for (ManipKind k : all_manip_kinds()) specs.push_back(ManipulationSpec::defaults_for(k));
  out.manifest = build_corpus(sources, specs, seed, out.dir.string(), 16);
  const int64_t crops = static_cast<int64_t>(out.manifest.records.size() / 6);
  out.splits = make_splits(out.manifest, crops * 6 / 10, crops / 10,
                           crops - crops * 6 / 10 - crops / 10, seed + 1);
  return out;
}

}  // namespace ipdp::testfix
