#include <doctest.h>

#include <filesystem>

#include <json.hpp>

#include "fixtures.hpp"
#include "ipdp/eval/evaluator.hpp"
#include "ipdp/train/trainer.hpp"

using namespace ipdp;
namespace fs = std::filesystem;

TEST_CASE("constant-0.5 predictor accuracy equals IP prevalence") {
  auto fix = testfix::make_tiny_corpus("eval_const");
  PatchStore store(fix.manifest, fix.dir.string());
  SiameseModel<float> model;
  model.configure(ArchConfig::tiny());
  model.init(1);
  model.alpha.zero();  // p = 0.5 for every pair; >= rule predicts IP

  const std::vector<ManipKind> classes{ManipKind::kOriginal, ManipKind::kMedianFilter,
                                       ManipKind::kResample};
  const auto pairs = sample_pairs(fix.manifest, classes, 30, 70, fix.splits.test_ids, 2);
  const EvalReport r = evaluate(model, store, pairs);
  CHECK(r.n_pairs == 100);
  CHECK(r.tp == 30);
  CHECK(r.fp == 70);
  CHECK(r.tn == 0);
  CHECK(r.fn == 0);
  CHECK(r.accuracy == doctest::Approx(0.3));
  CHECK(r.tp + r.fn + r.fp + r.tn == r.n_pairs);
  fs::remove_all(fix.dir);
}

TEST_CASE("evaluate is deterministic and matches the training-loop scorer") {
  auto fix = testfix::make_tiny_corpus("eval_det");
  PatchStore store(fix.manifest, fix.dir.string());
  SiameseModel<float> model;
  model.configure(ArchConfig::tiny());
  model.init(9);

  const std::vector<ManipKind> classes{ManipKind::kOriginal, ManipKind::kGaussianBlur};
  const auto pairs = sample_pairs(fix.manifest, classes, 40, 40, fix.splits.test_ids, 8);
  const EvalReport a = evaluate(model, store, pairs);
  const EvalReport b = evaluate(model, store, pairs);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.tp == b.tp);
  CHECK(a.fn == b.fn);

  // the cached-feature scorer agrees with direct batched pair evaluation
  auto [loss, acc] = evaluate_pairs_loss_acc(model, store, pairs);
  (void)loss;
  CHECK(acc == doctest::Approx(a.accuracy).epsilon(1e-12));
}

TEST_CASE("per-class protocol report carries the class accuracy") {
  auto fix = testfix::make_tiny_corpus("eval_pc");
  PatchStore store(fix.manifest, fix.dir.string());
  SiameseModel<float> model;
  model.configure(ArchConfig::tiny());
  model.init(2);
  const std::vector<ManipKind> others{ManipKind::kOriginal, ManipKind::kGaussianBlur,
                                      ManipKind::kResample};
  const EvalReport r = per_class_eval(model, store, fix.manifest, ManipKind::kMedianFilter,
                                      others, 20, 20, fix.splits.test_ids, 5);
  CHECK(r.n_pairs == 40);
  CHECK(r.per_class.count("median_filter") == 1);
  CHECK(r.per_class.at("median_filter") == r.accuracy);
}

TEST_CASE("generalization protocol refuses classes seen in training") {
  auto fix = testfix::make_tiny_corpus("eval_gen");
  PatchStore store(fix.manifest, fix.dir.string());
  SiameseModel<float> model;
  model.configure(ArchConfig::tiny());
  model.init(2);
  const std::vector<ManipKind> trained{ManipKind::kOriginal, ManipKind::kGaussianBlur,
                                       ManipKind::kMedianFilter, ManipKind::kResample};
  const std::vector<std::string> ckpt_classes{"original", "gaussian_blur", "median_filter",
                                              "resample"};
  // awgn unseen: runs
  CHECK_NOTHROW((void)generalization_eval(model, ckpt_classes, store, fix.manifest,
                                          ManipKind::kAwgn, trained, 10, 10,
                                          fix.splits.test_ids, 3));
  // median seen: refused
  CHECK_THROWS_AS((void)generalization_eval(model, ckpt_classes, store, fix.manifest,
                                            ManipKind::kMedianFilter,
                                            {ManipKind::kOriginal, ManipKind::kGaussianBlur},
                                            10, 10, fix.splits.test_ids, 3),
                  ProtocolError);
  fs::remove_all(fix.dir);
}

TEST_CASE("consistency map: diagonal, symmetry, shape, heatmap") {
  SiameseModel<float> model;
  model.configure(ArchConfig::tiny());
  model.init(8);

  SourceImage img;
  img.id = "x";
  img.pixels = make_synthetic_source(77, 48, 64);  // 3x4 tiles at 16
  const ConsistencyMap m = consistency_map(model, img, 16);
  CHECK(m.grid_rows == 3);
  CHECK(m.grid_cols == 4);
  CHECK(m.n() == 12);
  for (int i = 0; i < m.n(); ++i) {
    CHECK(m.at(i, i) == 0.5);
    for (int j = 0; j < m.n(); ++j) {
      CHECK(std::abs(m.at(i, j) - m.at(j, i)) < 1e-6);
      CHECK(m.at(i, j) > 0.0);
      CHECK(m.at(i, j) < 1.0);
    }
  }

  const Gray8 heat = consistency_heatmap(m, 4);
  CHECK(heat.height == 48);
  CHECK(heat.width == 48);

  const auto json_text = consistency_to_json(m);
  const auto parsed = nlohmann::json::parse(json_text);
  CHECK(parsed.at("grid_rows") == 3);
  CHECK(parsed.at("pairwise_ip_probability").size() == 12u);

  SourceImage tiny_img;
  tiny_img.pixels = Gray8(16, 16, 9);
  CHECK_THROWS_AS((void)consistency_map(model, tiny_img, 16), ProtocolError);
}

TEST_CASE("eval report json shape") {
  EvalReport r;
  r.n_pairs = 10;
  r.accuracy = 0.8;
  r.tp = 5;
  r.tn = 3;
  r.fp = 1;
  r.fn = 1;
  r.per_class["awgn"] = 0.8;
  const auto j = nlohmann::json::parse(report_to_json(r));
  CHECK(j.at("n_pairs") == 10);
  CHECK(j.at("accuracy") == doctest::Approx(0.8));
  CHECK(j.at("confusion").at("true_ip_pred_ip") == 5);
  CHECK(j.at("per_class").at("awgn") == doctest::Approx(0.8));
}

TEST_CASE("evaluate rejects out-of-range thresholds") {
  auto fix = testfix::make_tiny_corpus("eval_thr");
  PatchStore store(fix.manifest, fix.dir.string());
  SiameseModel<float> model;
  model.configure(ArchConfig::tiny());
  model.init(1);
  const auto pairs = sample_pairs(fix.manifest,
                                  {ManipKind::kOriginal, ManipKind::kGaussianBlur}, 4, 4,
                                  fix.splits.test_ids, 2);
  CHECK_THROWS_AS((void)evaluate(model, store, pairs, 0.0), ParamError);
  CHECK_THROWS_AS((void)evaluate(model, store, pairs, 1.0), ParamError);
  fs::remove_all(fix.dir);
}
