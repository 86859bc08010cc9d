#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ipdp/nn/siamese.hpp"

namespace ipdp {

constexpr uint32_t kCheckpointFormatVersion = 1;

// Versioned container of named float tensors plus run metadata. Loads are
// all-or-nothing; architecture-hash or version mismatches are refused.
struct Checkpoint {
  ArchConfig arch;
  std::string scaling = "unit";
  std::vector<std::string> training_classes;
  int64_t iteration = 0;
  std::string optimizer = "NADAM";
  int64_t opt_step = 0;
  std::map<std::string, Tensor<float>> tensors;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
// Refuses (CheckpointMismatchError) when the stored architecture differs.
Checkpoint load_checkpoint(const std::string& path, const ArchConfig& expected);

inline void model_to_checkpoint(SiameseModel<float>& model, Checkpoint& ckpt) {
  ckpt.arch = model.cfg();
  for (const auto& slot : model.params()) ckpt.tensors[slot.name] = *slot.value;
  for (const auto& [name, t] : model.tower.state_tensors()) ckpt.tensors[name] = *t;
}

inline void model_from_checkpoint(const Checkpoint& ckpt, SiameseModel<float>& model) {
  model.configure(ckpt.arch);
  for (const auto& slot : model.params()) {
    auto it = ckpt.tensors.find(slot.name);
    if (it == ckpt.tensors.end())
      throw CheckpointMismatchError("checkpoint missing tensor " + slot.name);
    if (it->second.shape != slot.value->shape)
      throw CheckpointMismatchError("checkpoint tensor shape mismatch for " + slot.name);
    *slot.value = it->second;
  }
  for (const auto& [name, t] : model.tower.state_tensors()) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end())
      throw CheckpointMismatchError("checkpoint missing tensor " + name);
    *t = it->second;
  }
}

}  // namespace ipdp
