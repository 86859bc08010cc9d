#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "ipdp/dataset.hpp"
#include "ipdp/image_io.hpp"
#include "ipdp/rng.hpp"
#include "ipdp/synthetic.hpp"

using namespace ipdp;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("ipdp_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::vector<ManipulationSpec> all_specs() {
  std::vector<ManipulationSpec> specs;
  for (ManipKind k : all_manip_kinds()) specs.push_back(ManipulationSpec::defaults_for(k));
  return specs;
}

}  // namespace

TEST_CASE("ingest: jpeg roundtrip quality and bypass") {
  SourceImage img;
  img.id = "grad";
  img.pixels = Gray8(200, 300);
  for (int r = 0; r < 200; ++r)
    for (int c = 0; c < 300; ++c)
      img.pixels.at(r, c) = static_cast<uint8_t>((r + c) * 255 / 499);

  const SourceImage q100 = ingest(img, 100);
  CHECK(psnr(img.pixels, q100.pixels) >= 50.0);

  const SourceImage bypass = ingest(img, 100, /*bypass_jpeg=*/true);
  CHECK(bypass.pixels == img.pixels);

  CHECK_THROWS_AS((void)ingest(img, 0), ParamError);
  CHECK_THROWS_AS((void)ingest(img, 101), ParamError);
}

TEST_CASE("gray input round-trips through the loader") {
  const fs::path dir = temp_dir("green");
  Gray8 g(40, 40);
  for (int r = 0; r < 40; ++r)
    for (int c = 0; c < 40; ++c) g.at(r, c) = static_cast<uint8_t>((r * 40 + c) % 251);
  save_png(g, (dir / "gray.png").string());
  const Gray8 back = load_green_channel((dir / "gray.png").string());
  CHECK(back == g);
  CHECK_THROWS_AS((void)load_green_channel((dir / "missing.png").string()), IoError);
  fs::remove_all(dir);
}

TEST_CASE("extract_patches tiling arithmetic") {
  SourceImage img;
  img.pixels = Gray8(2000, 3000, 10);
  CHECK(extract_patches(img, 150).size() == 13u * 20u);

  img.pixels = Gray8(150, 150, 1);
  const auto one = extract_patches(img, 150);
  REQUIRE(one.size() == 1u);
  CHECK(one[0].row == 0);
  CHECK(one[0].col == 0);

  img.pixels = Gray8(149, 300, 1);
  CHECK(extract_patches(img, 150).empty());
}

TEST_CASE("extract_patches copies the right pixels, row-major order") {
  SourceImage img;
  img.pixels = Gray8(8, 12);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 12; ++c) img.pixels.at(r, c) = static_cast<uint8_t>(r * 12 + c);
  const auto tiles = extract_patches(img, 4);
  REQUIRE(tiles.size() == 6u);
  CHECK(tiles[0].row == 0);
  CHECK(tiles[0].col == 0);
  CHECK(tiles[1].col == 4);
  CHECK(tiles[3].row == 4);
  CHECK(tiles[1].patch.at(0, 0) == img.pixels.at(0, 4));
  CHECK(tiles[5].patch.at(3, 3) == img.pixels.at(7, 11));
}

TEST_CASE("build_corpus: cartesian records, determinism, cap") {
  const fs::path dir_a = temp_dir("corpus_a");
  const fs::path dir_b = temp_dir("corpus_b");
  std::vector<SourceImage> sources;
  for (int i = 0; i < 2; ++i) {
    SourceImage s;
    s.id = "img" + std::to_string(i);
    s.pixels = make_synthetic_source(100 + static_cast<uint64_t>(i), 64, 96);
    sources.push_back(ingest(s, 100));
  }

  const Manifest m = build_corpus(sources, all_specs(), 42, dir_a.string(), 32);
  // 2 x floor(64/32)*floor(96/32) = 2*6 = 12 crops, x6 classes
  CHECK(m.records.size() == 72u);
  CHECK(m.patch_size == 32);
  const auto counts = m.class_counts();
  for (ManipKind k : all_manip_kinds()) CHECK(counts.at(k) == 12);

  PatchStore store(m, dir_a.string());
  for (const auto& r : m.records) {
    CHECK(r.spec.kind == r.klass);
    const Patch& p = store.load(r.patch_id);
    CHECK(p.height == 32);
  }

  // AWGN seeds are derived per patch: all distinct across crops
  std::set<uint64_t> seeds;
  for (const auto& r : m.records)
    if (r.klass == ManipKind::kAwgn) seeds.insert(r.spec.rng_seed);
  CHECK(seeds.size() == 12u);

  // byte-identical rerun
  (void)build_corpus(sources, all_specs(), 42, dir_b.string(), 32);
  CHECK(slurp(dir_a / "manifest.jsonl") == slurp(dir_b / "manifest.jsonl"));
  for (const auto& r : m.records)
    CHECK(slurp(dir_a / r.storage_ref) == slurp(dir_b / r.storage_ref));

  // per-image cap keeps the first tiles only
  const fs::path dir_c = temp_dir("corpus_c");
  const Manifest mc = build_corpus(sources, all_specs(), 42, dir_c.string(), 32, 4);
  CHECK(mc.records.size() == 2u * 4u * 6u);

  // specs must include the unaltered class
  CHECK_THROWS_AS(
      (void)build_corpus(sources, {ManipulationSpec::median_filter()}, 1, dir_c.string(), 32),
      ParamError);

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  fs::remove_all(dir_c);
}

TEST_CASE("manifest save/load round trip") {
  const fs::path dir = temp_dir("manifest");
  std::vector<SourceImage> sources(1);
  sources[0].id = "src";
  sources[0].pixels = make_synthetic_source(5, 64, 64);
  const Manifest m = build_corpus(sources, all_specs(), 9, dir.string(), 32);
  const Manifest l = load_manifest((dir / "manifest.jsonl").string());
  CHECK(l.corpus_seed == 9);
  CHECK(l.patch_size == 32);
  REQUIRE(l.records.size() == m.records.size());
  for (size_t i = 0; i < m.records.size(); ++i) {
    CHECK(l.records[i].patch_id == m.records[i].patch_id);
    CHECK(l.records[i].klass == m.records[i].klass);
    CHECK(l.records[i].spec == m.records[i].spec);
    CHECK(l.records[i].crop_row == m.records[i].crop_row);
  }
  fs::remove_all(dir);
}

namespace {

// in-memory corpus for sampling tests; no files needed
Manifest sampling_manifest(int crops_per_source = 10) {
  Manifest m;
  m.patch_size = 16;
  for (int s = 0; s < 2; ++s)
    for (int i = 0; i < crops_per_source; ++i)
      for (ManipKind k : all_manip_kinds()) {
        PatchRecord r;
        r.source_id = "s" + std::to_string(s);
        r.crop_row = i * 16;
        r.crop_col = 0;
        r.klass = k;
        r.spec = ManipulationSpec::defaults_for(k);
        r.patch_id =
            r.source_id + "_r" + std::to_string(r.crop_row) + "_c0_" + manip_kind_name(k);
        r.storage_ref = r.patch_id + ".png";
        m.records.push_back(r);
      }
  return m;
}

std::vector<std::string> all_ids(const Manifest& m) {
  std::vector<std::string> ids;
  for (const auto& r : m.records) ids.push_back(r.patch_id);
  return ids;
}

}  // namespace

TEST_CASE("sample_pairs: label contract, counts, determinism") {
  const Manifest m = sampling_manifest();
  const std::vector<ManipKind> classes{ManipKind::kOriginal, ManipKind::kGaussianBlur,
                                       ManipKind::kMedianFilter, ManipKind::kResample};
  const auto pairs = sample_pairs(m, classes, 200, 300, all_ids(m), 7);
  REQUIRE(pairs.size() == 500u);
  int n_ip = 0;
  for (const auto& p : pairs) {
    CHECK(p.a != p.b);
    const ManipKind ka = m.record(p.a).klass;
    const ManipKind kb = m.record(p.b).klass;
    if (p.label == 1) {
      CHECK(ka == kb);
      ++n_ip;
    } else {
      CHECK(ka != kb);
    }
  }
  CHECK(n_ip == 200);

  const auto rerun = sample_pairs(m, classes, 200, 300, all_ids(m), 7);
  for (size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs[i].a == rerun[i].a);
    CHECK(pairs[i].b == rerun[i].b);
    CHECK(pairs[i].label == rerun[i].label);
  }
}

TEST_CASE("sample_pairs names the deficient class") {
  const Manifest m = sampling_manifest();
  // restrict the pool to a single median patch
  std::vector<std::string> pool;
  int medians = 0;
  for (const auto& r : m.records) {
    if (r.klass == ManipKind::kMedianFilter && ++medians > 1) continue;
    pool.push_back(r.patch_id);
  }
  try {
    (void)sample_pairs(m, {ManipKind::kOriginal, ManipKind::kMedianFilter, ManipKind::kResample},
                       10, 10, pool, 1);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("median_filter") != std::string::npos);
  }
}

TEST_CASE("class_conditional_pairs construction contract") {
  const Manifest m = sampling_manifest();
  const std::vector<ManipKind> others{ManipKind::kOriginal, ManipKind::kGaussianBlur,
                                      ManipKind::kResample};
  const auto pairs =
      class_conditional_pairs(m, ManipKind::kMedianFilter, others, 50, 80, all_ids(m), 3);
  REQUIRE(pairs.size() == 130u);
  for (const auto& p : pairs) {
    const ManipKind ka = m.record(p.a).klass;
    const ManipKind kb = m.record(p.b).klass;
    if (p.label == 1) {
      CHECK(ka == ManipKind::kMedianFilter);
      CHECK(kb == ManipKind::kMedianFilter);
    } else {
      const bool a_is_target = ka == ManipKind::kMedianFilter;
      const bool b_is_target = kb == ManipKind::kMedianFilter;
      CHECK(a_is_target != b_is_target);  // exactly one side
    }
  }
  CHECK_THROWS_AS((void)class_conditional_pairs(m, ManipKind::kAwgn, {ManipKind::kAwgn}, 1, 1,
                                                all_ids(m), 1),
                  ParamError);
}

TEST_CASE("make_splits: disjoint, exact cardinality, crop aligned") {
  const Manifest m = sampling_manifest(10);  // 20 crops, 6 classes
  const SplitPlan plan = make_splits(m, 10, 4, 6, 99);
  CHECK(plan.train_ids.size() == 10u * 6u);
  CHECK(plan.val_ids.size() == 4u * 6u);
  CHECK(plan.test_ids.size() == 6u * 6u);

  std::set<std::string> train(plan.train_ids.begin(), plan.train_ids.end());
  std::set<std::string> val(plan.val_ids.begin(), plan.val_ids.end());
  std::set<std::string> test(plan.test_ids.begin(), plan.test_ids.end());
  for (const auto& id : val) CHECK(train.count(id) == 0);
  for (const auto& id : test) {
    CHECK(train.count(id) == 0);
    CHECK(val.count(id) == 0);
  }

  // crop alignment: all classes of one crop land in the same split
  auto crop_key = [&](const std::string& id) {
    const PatchRecord& r = m.record(id);
    return r.source_id + ":" + std::to_string(r.crop_row);
  };
  std::set<std::string> train_crops, val_crops, test_crops;
  for (const auto& id : plan.train_ids) train_crops.insert(crop_key(id));
  for (const auto& id : plan.val_ids) val_crops.insert(crop_key(id));
  for (const auto& id : plan.test_ids) test_crops.insert(crop_key(id));
  CHECK(train_crops.size() == 10u);
  CHECK(val_crops.size() == 4u);
  CHECK(test_crops.size() == 6u);
  for (const auto& c : val_crops) CHECK(train_crops.count(c) == 0);

  CHECK_THROWS_AS((void)make_splits(m, 15, 4, 6, 1), ParamError);
}

TEST_CASE("split + sampling respect the pool boundary") {
  const Manifest m = sampling_manifest(10);
  const SplitPlan plan = make_splits(m, 10, 4, 6, 123);
  const std::vector<ManipKind> classes{ManipKind::kOriginal, ManipKind::kMedianFilter};
  const auto pairs = sample_pairs(m, classes, 100, 100, plan.test_ids, 5);
  std::set<std::string> test(plan.test_ids.begin(), plan.test_ids.end());
  for (const auto& p : pairs) {
    CHECK(test.count(p.a) == 1);
    CHECK(test.count(p.b) == 1);
  }
}

TEST_CASE("PatchStore reports unresolvable refs") {
  const fs::path dir = temp_dir("store");
  std::vector<SourceImage> sources(1);
  sources[0].id = "src";
  sources[0].pixels = make_synthetic_source(5, 64, 64);
  Manifest m = build_corpus(sources, all_specs(), 9, dir.string(), 32);
  fs::remove(dir / m.records[3].storage_ref);
  PatchStore store(m, dir.string());
  CHECK_THROWS_AS(store.preload({m.records[3].patch_id}), DataError);
  fs::remove_all(dir);
}

TEST_CASE("pair file and split plan save/load round trip") {
  const fs::path dir = temp_dir("pairs");
  std::vector<PairSample> pairs{{"a", "b", 1}, {"c", "d", 0}};
  save_pairs(pairs, (dir / "p.jsonl").string());
  const auto back = load_pairs((dir / "p.jsonl").string());
  REQUIRE(back.size() == 2u);
  CHECK(back[0].a == "a");
  CHECK(back[1].label == 0);

  SplitPlan plan;
  plan.seed = 4;
  plan.train_ids = {"x", "y"};
  plan.val_ids = {"z"};
  plan.test_ids = {"w"};
  save_splits(plan, (dir / "s.json").string());
  const auto p2 = load_splits((dir / "s.json").string());
  CHECK(p2.seed == 4);
  CHECK(p2.train_ids == plan.train_ids);
  CHECK(p2.test_ids == plan.test_ids);
  fs::remove_all(dir);
}
