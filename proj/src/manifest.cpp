#include "ipdp/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "ipdp/error.hpp"

namespace ipdp {

using nlohmann::json;

const PatchRecord& Manifest::record(const std::string& patch_id) const {
  build_index();
  auto it = index_.find(patch_id);
  if (it == index_.end()) throw DataError("unknown patch_id: " + patch_id);
  return records[it->second];
}

bool Manifest::has(const std::string& patch_id) const {
  build_index();
  return index_.count(patch_id) > 0;
}

void Manifest::build_index() const {
  if (index_.size() == records.size()) return;
  index_.clear();
  index_.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) index_.emplace(records[i].patch_id, i);
}

std::vector<std::string> Manifest::ids_of_class(ManipKind k) const {
  std::vector<std::string> out;
  for (const auto& r : records)
    if (r.klass == k) out.push_back(r.patch_id);
  return out;
}

std::map<ManipKind, int64_t> Manifest::class_counts() const {
  std::map<ManipKind, int64_t> out;
  for (const auto& r : records) out[r.klass]++;
  return out;
}

namespace {

json spec_to_json(const ManipulationSpec& s) {
  json j;
  j["kind"] = manip_kind_name(s.kind);
  switch (s.kind) {
    case ManipKind::kOriginal: break;
    case ManipKind::kGaussianBlur:
      j["kernel_size"] = s.kernel_size;
      j["sigma"] = s.sigma;
      break;
    case ManipKind::kMedianFilter: j["kernel_size"] = s.kernel_size; break;
    case ManipKind::kResample: j["scale_factor"] = s.scale_factor; break;
    case ManipKind::kAwgn:
      j["sigma"] = s.sigma;
      j["rng_seed"] = s.rng_seed;
      break;
    case ManipKind::kGamma: j["gamma"] = s.gamma; break;
  }
  return j;
}

ManipulationSpec spec_from_json(const json& j) {
  ManipulationSpec s;
  s.kind = manip_kind_from_name(j.at("kind").get<std::string>());
  if (j.contains("kernel_size")) s.kernel_size = j["kernel_size"].get<int>();
  if (j.contains("sigma")) s.sigma = j["sigma"].get<double>();
  if (j.contains("scale_factor")) s.scale_factor = j["scale_factor"].get<double>();
  if (j.contains("gamma")) s.gamma = j["gamma"].get<double>();
  if (j.contains("rng_seed")) s.rng_seed = j["rng_seed"].get<uint64_t>();
  return s;
}

}  // namespace

void save_manifest(const Manifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path);
  json header;
  header["format_version"] = m.format_version;
  header["corpus_seed"] = m.corpus_seed;
  header["patch_size"] = m.patch_size;
  out << header.dump() << "\n";
  for (const auto& r : m.records) {
    json j;
    j["patch_id"] = r.patch_id;
    j["source_id"] = r.source_id;
    j["crop_origin"] = {r.crop_row, r.crop_col};
    j["class"] = manip_kind_name(r.klass);
    j["spec"] = spec_to_json(r.spec);
    j["storage_ref"] = r.storage_ref;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + path);
  Manifest m;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty manifest: " + path);
  try {
    json header = json::parse(line);
    m.format_version = header.at("format_version").get<int>();
    if (m.format_version != kManifestFormatVersion)
      throw IoError("unsupported manifest format_version");
    m.corpus_seed = header.at("corpus_seed").get<uint64_t>();
    m.patch_size = header.at("patch_size").get<int>();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      PatchRecord r;
      r.patch_id = j.at("patch_id").get<std::string>();
      r.source_id = j.at("source_id").get<std::string>();
      r.crop_row = j.at("crop_origin")[0].get<int>();
      r.crop_col = j.at("crop_origin")[1].get<int>();
      r.klass = manip_kind_from_name(j.at("class").get<std::string>());
      r.spec = spec_from_json(j.at("spec"));
      r.storage_ref = j.at("storage_ref").get<std::string>();
      m.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + path + ": " + e.what());
  }
  return m;
}

void save_pairs(const std::vector<PairSample>& pairs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path);
  for (const auto& p : pairs) {
    json j;
    j["a"] = p.a;
    j["b"] = p.b;
    j["label"] = p.label;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<PairSample> load_pairs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open pair file: " + path);
  std::vector<PairSample> out;
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      out.push_back({j.at("a").get<std::string>(), j.at("b").get<std::string>(),
                     j.at("label").get<int>()});
    }
  } catch (const json::exception& e) {
    throw IoError("malformed pair file " + path + ": " + e.what());
  }
  return out;
}

void save_splits(const SplitPlan& plan, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path);
  json j;
  j["seed"] = plan.seed;
  j["train"] = plan.train_ids;
  j["val"] = plan.val_ids;
  j["test"] = plan.test_ids;
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

SplitPlan load_splits(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open splits file: " + path);
  try {
    json j = json::parse(in);
    SplitPlan p;
    p.seed = j.at("seed").get<uint64_t>();
    p.train_ids = j.at("train").get<std::vector<std::string>>();
    p.val_ids = j.at("val").get<std::vector<std::string>>();
    p.test_ids = j.at("test").get<std::vector<std::string>>();
    return p;
  } catch (const json::exception& e) {
    throw IoError("malformed splits file " + path + ": " + e.what());
  }
}

}  // namespace ipdp
