#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ipdp/dataset.hpp"
#include "ipdp/nn/checkpoint.hpp"
#include "ipdp/train/optimizer.hpp"

namespace ipdp {

struct TrainConfig {
  double learning_rate = 0.002;
  double momentum = 0.002;  // SGD_MOMENTUM only; Nadam ignores it
  double lr_decay = 0.005;  // inverse-time schedule
  double l2 = 0.0001;
  int64_t batch_size = 16;
  int64_t max_iterations = 5000;
  OptimizerKind optimizer = OptimizerKind::kNadam;
  int64_t eval_every = 250;
  uint64_t seed = 1;
  // Nadam moment decays; the published momentum knob does not map onto
  // these, so they keep their conventional values unless overridden.
  double nadam_beta1 = 0.9;
  double nadam_beta2 = 0.999;
  double nadam_eps = 1e-8;
  int64_t early_stop_patience = 10;  // evals without val-loss improvement; 0 disables

  void validate() const;
};

// Key-value text file, one `name = value` per line, names matching the
// fields above. Unknown keys are rejected.
TrainConfig load_train_config(const std::string& path);
void save_train_config(const TrainConfig& c, const std::string& path);

struct CurvePoint {
  int64_t iteration = 0;
  double train_loss = 0, train_acc = 0, val_loss = 0, val_acc = 0;
};

void save_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path);

struct TrainResult {
  std::vector<CurvePoint> curve;
  std::string final_checkpoint;
  std::string best_checkpoint;
  std::string curve_csv;
  std::vector<std::string> events;  // e.g. degenerate-filter rescues
  int64_t iterations_run = 0;
};

// Hook invoked after every completed iteration (post-projection); used by
// invariant checks. Return false to stop early.
using IterationHook = std::function<bool(int64_t iteration, const SiameseModel<float>& model)>;

// Runs the optimization loop: batches of pairs through the shared tower,
// mean BCE, optimizer step, constraint projection, periodic validation.
// Writes curve.csv, final.ckpt and best.ckpt under out_dir.
TrainResult train(const ArchConfig& arch, const TrainConfig& config, const Manifest& manifest,
                  PatchStore& store, const std::vector<PairSample>& train_pairs,
                  const std::vector<PairSample>& val_pairs, const std::string& out_dir,
                  const IterationHook& hook = nullptr);

// Loss/accuracy of a pair list under a model in eval mode (batched).
std::pair<double, double> evaluate_pairs_loss_acc(SiameseModel<float>& model, PatchStore& store,
                                                  const std::vector<PairSample>& pairs,
                                                  int64_t batch_size = 32);

}  // namespace ipdp
