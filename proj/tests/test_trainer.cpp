#include <doctest.h>

#include <filesystem>

#include "fixtures.hpp"
#include "ipdp/train/trainer.hpp"

using namespace ipdp;
namespace fs = std::filesystem;

namespace {

TrainConfig small_config(int64_t iters, int64_t eval_every) {
  TrainConfig c;
  c.batch_size = 8;
  c.max_iterations = iters;
  c.eval_every = eval_every;
  c.seed = 5;
  c.early_stop_patience = 0;
  return c;
}

}  // namespace

TEST_CASE("train: curve, invariants, determinism, checkpoints") {
  auto fix = testfix::make_tiny_corpus("train");
  PatchStore store(fix.manifest, fix.dir.string());
  const std::vector<ManipKind> classes{ManipKind::kOriginal, ManipKind::kGaussianBlur,
                                       ManipKind::kMedianFilter, ManipKind::kResample};
  const auto train_pairs =
      sample_pairs(fix.manifest, classes, 60, 60, fix.splits.train_ids, 3);
  const auto val_pairs = sample_pairs(fix.manifest, classes, 10, 10, fix.splits.val_ids, 4);

  const fs::path out_a = fix.dir / "run_a";
  const fs::path out_b = fix.dir / "run_b";

  int64_t hook_calls = 0;
  IterationHook hook = [&](int64_t, const SiameseModel<float>& m) {
    ++hook_calls;
    const auto dev = bank_deviation(m.tower.conv1.w);
    CHECK(dev.max_center == 0.0);
    CHECK(dev.max_off_sum <= 1e-5);
    return true;
  };

  const TrainConfig cfg = small_config(30, 10);
  const TrainResult ra =
      train(ArchConfig::tiny(), cfg, fix.manifest, store, train_pairs, val_pairs,
            out_a.string(), hook);
  CHECK(hook_calls == 30);
  CHECK(ra.iterations_run == 30);
  REQUIRE(ra.curve.size() == 3u);
  CHECK(ra.curve.back().iteration == 30);
  for (const auto& pt : ra.curve) {
    CHECK(pt.train_loss > 0.0);
    CHECK(pt.val_loss > 0.0);
    CHECK(pt.train_acc >= 0.0);
    CHECK(pt.val_acc <= 1.0);
  }
  CHECK(fs::exists(ra.final_checkpoint));
  CHECK(fs::exists(ra.best_checkpoint));
  CHECK(fs::exists(ra.curve_csv));

  // identical seeds reproduce the run byte for byte
  const TrainResult rb = train(ArchConfig::tiny(), cfg, fix.manifest, store, train_pairs,
                               val_pairs, out_b.string());
  CHECK(testfix::slurp(ra.curve_csv) == testfix::slurp(rb.curve_csv));
  CHECK(testfix::slurp(ra.final_checkpoint) == testfix::slurp(rb.final_checkpoint));

  // the final checkpoint reproduces in-memory behavior
  const Checkpoint ckpt = load_checkpoint(ra.final_checkpoint);
  CHECK(ckpt.iteration == 30);
  CHECK(ckpt.optimizer == "NADAM");
  CHECK(ckpt.training_classes.size() == 4u);
  SiameseModel<float> restored;
  model_from_checkpoint(ckpt, restored);
  auto [loss_a, acc_a] = evaluate_pairs_loss_acc(restored, store, val_pairs);
  SiameseModel<float> restored2;
  model_from_checkpoint(load_checkpoint(rb.final_checkpoint), restored2);
  auto [loss_b, acc_b] = evaluate_pairs_loss_acc(restored2, store, val_pairs);
  CHECK(loss_a == loss_b);
  CHECK(acc_a == acc_b);

  fs::remove_all(fix.dir);
}

TEST_CASE("train: early stop on validation plateau") {
  auto fix = testfix::make_tiny_corpus("earlystop");
  PatchStore store(fix.manifest, fix.dir.string());
  const std::vector<ManipKind> classes{ManipKind::kOriginal, ManipKind::kMedianFilter};
  const auto train_pairs = sample_pairs(fix.manifest, classes, 40, 40, fix.splits.train_ids, 3);
  const auto val_pairs = sample_pairs(fix.manifest, classes, 8, 8, fix.splits.val_ids, 4);

  TrainConfig cfg = small_config(500, 5);
  cfg.early_stop_patience = 1;
  cfg.learning_rate = 1e-20;  // updates underflow: only BN stats drift
  const TrainResult r = train(ArchConfig::tiny(), cfg, fix.manifest, store, train_pairs,
                              val_pairs, (fix.dir / "run").string());
  CHECK(r.iterations_run < 500);
  fs::remove_all(fix.dir);
}

TEST_CASE("train: diverging optimization aborts with a numeric error") {
  auto fix = testfix::make_tiny_corpus("diverge");
  PatchStore store(fix.manifest, fix.dir.string());
  const std::vector<ManipKind> classes{ManipKind::kOriginal, ManipKind::kMedianFilter};
  const auto train_pairs = sample_pairs(fix.manifest, classes, 40, 40, fix.splits.train_ids, 3);

  TrainConfig cfg = small_config(200, 50);
  cfg.optimizer = OptimizerKind::kSgdMomentum;
  cfg.learning_rate = 1e30;
  bool threw = false;
  try {
    (void)train(ArchConfig::tiny(), cfg, fix.manifest, store, train_pairs, {},
                (fix.dir / "run").string());
  } catch (const NumericError&) {
    threw = true;
    CHECK(fs::exists(fix.dir / "run" / "last_good.ckpt"));
  }
  CHECK(threw);
  fs::remove_all(fix.dir);
}

TEST_CASE("train rejects unresolvable pair references before step 1") {
  auto fix = testfix::make_tiny_corpus("resolve");
  PatchStore store(fix.manifest, fix.dir.string());
  std::vector<PairSample> bad{{"nope_a", "nope_b", 1}};
  CHECK_THROWS_AS((void)train(ArchConfig::tiny(), small_config(10, 5), fix.manifest, store, bad,
                              {}, (fix.dir / "run").string()),
                  DataError);
  fs::remove_all(fix.dir);
}

TEST_CASE("sgd optimizer path trains too") {
  auto fix = testfix::make_tiny_corpus("sgd");
  PatchStore store(fix.manifest, fix.dir.string());
  const std::vector<ManipKind> classes{ManipKind::kOriginal, ManipKind::kMedianFilter};
  const auto train_pairs = sample_pairs(fix.manifest, classes, 40, 40, fix.splits.train_ids, 3);
  TrainConfig cfg = small_config(20, 10);
  cfg.optimizer = OptimizerKind::kSgdMomentum;
  const TrainResult r = train(ArchConfig::tiny(), cfg, fix.manifest, store, train_pairs, {},
                              (fix.dir / "run").string());
  CHECK(r.curve.size() == 2u);
  const Checkpoint ckpt = load_checkpoint(r.final_checkpoint);
  CHECK(ckpt.optimizer == "SGD_MOMENTUM");
  CHECK(ckpt.tensors.count("sgd.velocity.conv2.w") == 1);
  fs::remove_all(fix.dir);
}

TEST_CASE("train config file: round trip, overrides, unknown keys") {
  const auto dir = testfix::fresh_dir("config");
  TrainConfig c;
  c.learning_rate = 0.01;
  c.batch_size = 4;
  c.optimizer = OptimizerKind::kSgdMomentum;
  c.seed = 99;
  save_train_config(c, (dir / "cfg.txt").string());
  const TrainConfig l = load_train_config((dir / "cfg.txt").string());
  CHECK(l.learning_rate == 0.01);
  CHECK(l.batch_size == 4);
  CHECK(l.optimizer == OptimizerKind::kSgdMomentum);
  CHECK(l.seed == 99);

  std::ofstream(dir / "bad.txt") << "not_a_key = 3\n";
  CHECK_THROWS_AS((void)load_train_config((dir / "bad.txt").string()), ParamError);

  std::ofstream(dir / "comment.txt") << "# comment only\nlearning_rate = 0.5\n";
  CHECK(load_train_config((dir / "comment.txt").string()).learning_rate == 0.5);
  fs::remove_all(dir);
}

TEST_CASE("curve csv writer/loader round trip") {
  const auto dir = testfix::fresh_dir("curve");
  std::vector<CurvePoint> curve{{10, 0.7, 0.5, 0.69, 0.52}, {20, 0.6, 0.6, 0.61, 0.58}};
  save_curve_csv(curve, (dir / "c.csv").string());
  const std::string text = testfix::slurp(dir / "c.csv");
  CHECK(text.rfind("iteration,train_loss,train_acc,val_loss,val_acc\n", 0) == 0);
  fs::remove_all(dir);
}
