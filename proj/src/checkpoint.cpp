#include "ipdp/nn/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace ipdp {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'I', 'P', 'D', 'P', 'C', 'K', 'P', 'T'};

json arch_to_json(const ArchConfig& a) {
  json j;
  j["name"] = a.name;
  j["patch"] = a.patch;
  j["k1_filters"] = a.k1_filters;
  j["k1_size"] = a.k1_size;
  j["conv2_filters"] = a.conv2_filters;
  j["conv2_size"] = a.conv2_size;
  j["conv2_stride"] = a.conv2_stride;
  j["pool1_size"] = a.pool1_size;
  j["pool1_stride"] = a.pool1_stride;
  j["conv3_filters"] = a.conv3_filters;
  j["conv3_size"] = a.conv3_size;
  j["conv3_stride"] = a.conv3_stride;
  j["pool2_size"] = a.pool2_size;
  j["pool2_stride"] = a.pool2_stride;
  j["fc1"] = a.fc1;
  j["fc2"] = a.fc2;
  j["feature_dim"] = a.feature_dim;
  j["dropout"] = a.dropout;
  return j;
}

ArchConfig arch_from_json(const json& j) {
  ArchConfig a;
  a.name = j.at("name").get<std::string>();
  a.patch = j.at("patch").get<int64_t>();
  a.k1_filters = j.at("k1_filters").get<int64_t>();
  a.k1_size = j.at("k1_size").get<int64_t>();
  a.conv2_filters = j.at("conv2_filters").get<int64_t>();
  a.conv2_size = j.at("conv2_size").get<int64_t>();
  a.conv2_stride = j.at("conv2_stride").get<int64_t>();
  a.pool1_size = j.at("pool1_size").get<int64_t>();
  a.pool1_stride = j.at("pool1_stride").get<int64_t>();
  a.conv3_filters = j.at("conv3_filters").get<int64_t>();
  a.conv3_size = j.at("conv3_size").get<int64_t>();
  a.conv3_stride = j.at("conv3_stride").get<int64_t>();
  a.pool2_size = j.at("pool2_size").get<int64_t>();
  a.pool2_stride = j.at("pool2_stride").get<int64_t>();
  a.fc1 = j.at("fc1").get<int64_t>();
  a.fc2 = j.at("fc2").get<int64_t>();
  a.feature_dim = j.at("feature_dim").get<int64_t>();
  a.dropout = j.at("dropout").get<double>();
  return a;
}

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("checkpoint truncated");
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json meta;
  meta["arch"] = arch_to_json(ckpt.arch);
  meta["scaling"] = ckpt.scaling;
  meta["training_classes"] = ckpt.training_classes;
  meta["iteration"] = ckpt.iteration;
  meta["optimizer"] = ckpt.optimizer;
  meta["opt_step"] = ckpt.opt_step;
  const std::string meta_str = meta.dump();

  uint64_t total = sizeof(kMagic) + sizeof(uint32_t) + sizeof(uint64_t) + sizeof(uint64_t) +
                   sizeof(uint32_t) + meta_str.size() + sizeof(uint32_t);
  for (const auto& [name, t] : ckpt.tensors) {
    total += sizeof(uint32_t) + name.size() + sizeof(uint32_t) +
             t.shape.size() * sizeof(int64_t) + sizeof(uint64_t) + t.data.size() * sizeof(float);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for write: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kCheckpointFormatVersion);
  write_pod(out, total);
  const uint64_t arch_hash = ckpt.arch.hash();
  write_pod(out, arch_hash);
  write_pod(out, static_cast<uint32_t>(meta_str.size()));
  out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
  write_pod(out, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    write_pod(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(out, static_cast<uint32_t>(t.shape.size()));
    for (int64_t d : t.shape) write_pod(out, d);
    write_pod(out, static_cast<uint64_t>(t.data.size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!out) throw IoError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointMismatchError("not a checkpoint file: " + path);
  uint32_t version = 0;
  read_pod(in, version);
  if (version != kCheckpointFormatVersion)
    throw CheckpointMismatchError("unsupported checkpoint format_version " +
                                  std::to_string(version));
  uint64_t total = 0;
  read_pod(in, total);
  std::error_code ec;
  const uint64_t actual = std::filesystem::file_size(path, ec);
  if (ec || actual != total)
    throw IoError("checkpoint truncated or oversized: expected " + std::to_string(total) +
                  " bytes, found " + std::to_string(actual));

  uint64_t stored_hash = 0;
  read_pod(in, stored_hash);
  uint32_t meta_len = 0;
  read_pod(in, meta_len);
  std::string meta_str(meta_len, '\0');
  in.read(meta_str.data(), meta_len);
  if (!in) throw IoError("checkpoint truncated");

  Checkpoint ckpt;
  try {
    json meta = json::parse(meta_str);
    ckpt.arch = arch_from_json(meta.at("arch"));
    ckpt.scaling = meta.at("scaling").get<std::string>();
    ckpt.training_classes = meta.at("training_classes").get<std::vector<std::string>>();
    ckpt.iteration = meta.at("iteration").get<int64_t>();
    ckpt.optimizer = meta.at("optimizer").get<std::string>();
    ckpt.opt_step = meta.at("opt_step").get<int64_t>();
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed checkpoint metadata: ") + e.what());
  }
  if (ckpt.arch.hash() != stored_hash)
    throw CheckpointMismatchError("checkpoint architecture hash does not match its metadata");

  uint32_t n_tensors = 0;
  read_pod(in, n_tensors);
  for (uint32_t i = 0; i < n_tensors; ++i) {
    uint32_t name_len = 0;
    read_pod(in, name_len);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    uint32_t ndim = 0;
    read_pod(in, ndim);
    std::vector<int64_t> shape(ndim);
    for (auto& d : shape) read_pod(in, d);
    uint64_t bytes = 0;
    read_pod(in, bytes);
    Tensor<float> t(shape);
    if (bytes != t.data.size() * sizeof(float))
      throw IoError("checkpoint tensor size mismatch for " + name);
    in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw IoError("checkpoint truncated");
    ckpt.tensors.emplace(std::move(name), std::move(t));
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::string& path, const ArchConfig& expected) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.arch.hash() != expected.hash())
    throw CheckpointMismatchError("architecture mismatch: checkpoint is '" + ckpt.arch.name +
                                  "' (" + ckpt.arch.canonical() + "), expected '" +
                                  expected.name + "' (" + expected.canonical() + ")");
  return ckpt;
}

}  // namespace ipdp
