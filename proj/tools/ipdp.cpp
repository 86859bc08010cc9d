// ipdp: synthesize manipulation corpora, sample IP/DP pairs, train the
// siamese detector, and run the evaluation protocols.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "ipdp/dataset.hpp"
#include "ipdp/eval/evaluator.hpp"
#include "ipdp/image_io.hpp"
#include "ipdp/plot.hpp"
#include "ipdp/synthetic.hpp"
#include "ipdp/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace ipdp;

namespace {

int exit_code_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kUsage: return 2;
    case ErrorCategory::kIo: return 3;
    case ErrorCategory::kData: return 4;
    case ErrorCategory::kCheckpointMismatch: return 5;
    case ErrorCategory::kProtocol: return 6;
    case ErrorCategory::kNumeric: return 7;
    case ErrorCategory::kInternal: return 10;
  }
  return 10;
}

constexpr const char* kExitCodeTable =
    "Exit codes: 0 ok, 2 USAGE, 3 IO, 4 DATA, 5 CHECKPOINT_MISMATCH, 6 PROTOCOL, 7 NUMERIC, "
    "10 INTERNAL";

std::vector<ManipKind> parse_classes(const std::string& csv) {
  std::vector<ManipKind> out;
  std::string cur;
  std::stringstream ss(csv);
  while (std::getline(ss, cur, ',')) {
    if (!cur.empty()) out.push_back(manip_kind_from_name(cur));
  }
  require(!out.empty(), "empty class list");
  return out;
}

std::string read_file_or_empty(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------
struct SynthArgs {
  std::string input_dir, out_dir;
  uint64_t seed = 1;
  int patch_size = 150;
  int jpeg_quality = 100;
  std::string classes = "original,gaussian_blur,median_filter,resample,awgn,gamma";
  int per_image_cap = 0;
  bool no_jpeg = false;
  int make_demo_sources = 0;
};

int run_synth(const SynthArgs& a) {
  const auto kinds = parse_classes(a.classes);
  std::vector<ManipulationSpec> specs;
  for (ManipKind k : kinds) specs.push_back(ManipulationSpec::defaults_for(k));

  if (a.make_demo_sources > 0) {
    bool empty = !fs::exists(a.input_dir) || fs::is_empty(a.input_dir);
    if (empty) {
      write_demo_sources(a.input_dir, a.make_demo_sources, a.seed,
                         std::max(a.patch_size * 3, 192), std::max(a.patch_size * 4, 256));
      std::cout << "generated " << a.make_demo_sources << " demo source images in "
                << a.input_dir << "\n";
    }
  }

  std::vector<fs::path> files;
  if (fs::exists(a.input_dir))
    for (const auto& e : fs::directory_iterator(a.input_dir))
      if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ParamError("no input images in " + a.input_dir);

  std::vector<SourceImage> sources;
  for (const auto& f : files) {
    SourceImage s;
    s.id = f.stem().string();
    s.origin_path = f.string();
    s.pixels = load_green_channel(f.string());
    sources.push_back(ingest(s, a.jpeg_quality, a.no_jpeg));
  }

  const fs::path manifest_path = fs::path(a.out_dir) / "manifest.jsonl";
  const std::string before = read_file_or_empty(manifest_path);
  const Manifest m = build_corpus(sources, specs, a.seed, a.out_dir, a.patch_size,
                                  a.per_image_cap);
  const std::string after = read_file_or_empty(manifest_path);

  std::cout << "corpus: " << m.records.size() << " patches ("
            << m.records.size() / specs.size() << " crops x " << specs.size() << " classes)\n";
  for (const auto& [k, n] : m.class_counts())
    std::cout << "  " << manip_kind_name(k) << ": " << n << "\n";
  if (!before.empty() && before == after) std::cout << "manifest unchanged\n";
  std::cout << "manifest: " << manifest_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// pairs
// ---------------------------------------------------------------------------
struct PairsArgs {
  std::string manifest, out_dir, split_spec = "0/0/0", splits_path;
  std::string classes = "original,gaussian_blur,median_filter,resample";
  int64_t n_ip = 1000, n_dp = 1000;
  int64_t n_ip_val = -1, n_dp_val = -1, n_ip_test = -1, n_dp_test = -1;
  uint64_t seed = 1;
  std::string protocol = "mixed";
  std::string target;
};

SplitPlan obtain_splits(const PairsArgs& a, const Manifest& m) {
  if (!a.splits_path.empty() && fs::exists(a.splits_path)) return load_splits(a.splits_path);
  int64_t tr = 0, va = 0, te = 0;
  if (std::sscanf(a.split_spec.c_str(), "%ld/%ld/%ld", &tr, &va, &te) != 3)
    throw ParamError("--split-spec must be train/val/test crop counts, e.g. 2000/250/500");
  require(tr + va + te > 0, "--split-spec or --splits required");
  SplitPlan plan = make_splits(m, tr, va, te, a.seed);
  const fs::path out = a.splits_path.empty() ? fs::path(a.out_dir) / "splits.json"
                                             : fs::path(a.splits_path);
  fs::create_directories(out.parent_path());
  save_splits(plan, out.string());
  return plan;
}

int run_pairs(const PairsArgs& a) {
  const Manifest m = load_manifest(a.manifest);
  const auto classes = parse_classes(a.classes);
  fs::create_directories(a.out_dir);
  const SplitPlan plan = obtain_splits(a, m);

  if (a.protocol == "mixed") {
    const int64_t niv = a.n_ip_val >= 0 ? a.n_ip_val : std::max<int64_t>(1, a.n_ip / 50);
    const int64_t ndv = a.n_dp_val >= 0 ? a.n_dp_val : std::max<int64_t>(1, a.n_dp / 50);
    const int64_t nit = a.n_ip_test >= 0 ? a.n_ip_test : std::max<int64_t>(1, a.n_ip / 10);
    const int64_t ndt = a.n_dp_test >= 0 ? a.n_dp_test : std::max<int64_t>(1, a.n_dp / 10);
    const auto train = sample_pairs(m, classes, a.n_ip, a.n_dp, plan.train_ids,
                                    splitmix64(a.seed + 1));
    const auto val = sample_pairs(m, classes, niv, ndv, plan.val_ids, splitmix64(a.seed + 2));
    const auto test = sample_pairs(m, classes, nit, ndt, plan.test_ids, splitmix64(a.seed + 3));
    save_pairs(train, (fs::path(a.out_dir) / "train_pairs.jsonl").string());
    save_pairs(val, (fs::path(a.out_dir) / "val_pairs.jsonl").string());
    save_pairs(test, (fs::path(a.out_dir) / "test_pairs.jsonl").string());
    std::cout << "train " << train.size() << ", val " << val.size() << ", test " << test.size()
              << " pairs written to " << a.out_dir << "\n";
    return 0;
  }

  if (a.protocol == "per-class") {
    std::vector<ManipKind> targets;
    if (a.target.empty())
      targets = classes;
    else
      targets.push_back(manip_kind_from_name(a.target));
    for (ManipKind t : targets) {
      std::vector<ManipKind> others;
      for (ManipKind c : classes)
        if (c != t) others.push_back(c);
      require(!others.empty(), "per-class protocol needs other classes");
      const auto pairs = class_conditional_pairs(m, t, others, a.n_ip, a.n_dp, plan.test_ids,
                                                 splitmix64(a.seed + 10 + static_cast<int>(t)));
      const fs::path out =
          fs::path(a.out_dir) / ("perclass_" + std::string(manip_kind_name(t)) + "_pairs.jsonl");
      save_pairs(pairs, out.string());
      std::cout << manip_kind_name(t) << ": " << pairs.size() << " pairs -> " << out.string()
                << "\n";
    }
    return 0;
  }

  if (a.protocol == "generalization") {
    require(!a.target.empty(), "generalization protocol requires --target");
    const ManipKind t = manip_kind_from_name(a.target);
    for (ManipKind c : classes)
      if (c == t)
        throw ProtocolError("generalization target '" + a.target +
                            "' must not appear in --classes (the training classes)");
    const auto pairs = class_conditional_pairs(m, t, classes, a.n_ip, a.n_dp, plan.test_ids,
                                               splitmix64(a.seed + 20));
    const fs::path out =
        fs::path(a.out_dir) / ("gen_" + std::string(manip_kind_name(t)) + "_pairs.jsonl");
    save_pairs(pairs, out.string());
    std::cout << "generalization " << manip_kind_name(t) << ": " << pairs.size() << " pairs -> "
              << out.string() << "\n";
    return 0;
  }

  throw ParamError("unknown protocol '" + a.protocol +
                   "' (valid: mixed, per-class, generalization)");
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------
struct TrainArgs {
  std::string manifest, corpus_dir, train_pairs, val_pairs, out_dir, arch = "default";
  std::string config_path;
  TrainConfig config;
  std::map<std::string, bool> explicit_flags;
};

int run_train(TrainArgs& a, const TrainConfig& flag_values,
              const std::map<std::string, bool>& given) {
  TrainConfig cfg;
  if (!a.config_path.empty()) cfg = load_train_config(a.config_path);
  // flags win over config-file values
  if (given.at("lr")) cfg.learning_rate = flag_values.learning_rate;
  if (given.at("momentum")) cfg.momentum = flag_values.momentum;
  if (given.at("lr_decay")) cfg.lr_decay = flag_values.lr_decay;
  if (given.at("l2")) cfg.l2 = flag_values.l2;
  if (given.at("batch_size")) cfg.batch_size = flag_values.batch_size;
  if (given.at("max_iterations")) cfg.max_iterations = flag_values.max_iterations;
  if (given.at("optimizer")) cfg.optimizer = flag_values.optimizer;
  if (given.at("eval_every")) cfg.eval_every = flag_values.eval_every;
  if (given.at("seed")) cfg.seed = flag_values.seed;
  if (given.at("patience")) cfg.early_stop_patience = flag_values.early_stop_patience;

  const Manifest m = load_manifest(a.manifest);
  const std::string corpus_dir =
      a.corpus_dir.empty() ? fs::path(a.manifest).parent_path().string() : a.corpus_dir;
  PatchStore store(m, corpus_dir);
  const auto train_list = load_pairs(a.train_pairs);
  std::vector<PairSample> val_list;
  if (!a.val_pairs.empty()) val_list = load_pairs(a.val_pairs);

  const ArchConfig arch = ArchConfig::by_name(a.arch);
  require(arch.patch == m.patch_size, "architecture patch size " + std::to_string(arch.patch) +
                                          " does not match corpus patch size " +
                                          std::to_string(m.patch_size));
  const TrainResult r = train(arch, cfg, m, store, train_list, val_list, a.out_dir);
  fs::create_directories(a.out_dir);
  save_train_config(cfg, (fs::path(a.out_dir) / "train_config.txt").string());
  std::cout << "iterations: " << r.iterations_run << "\n";
  if (!r.curve.empty()) {
    const auto& last = r.curve.back();
    std::cout << "final: train_loss " << last.train_loss << ", train_acc " << last.train_acc;
    if (!val_list.empty())
      std::cout << ", val_loss " << last.val_loss << ", val_acc " << last.val_acc;
    std::cout << "\n";
  }
  for (const auto& e : r.events) std::cout << "event: " << e << "\n";
  std::cout << "final checkpoint: " << r.final_checkpoint << "\n"
            << "best checkpoint: " << r.best_checkpoint << "\n"
            << "curves: " << r.curve_csv << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------
struct EvalArgs {
  std::string checkpoint, manifest, corpus_dir, pairs, splits, out;
  std::string protocol = "pairs";  // pairs | per-class | generalization
  std::string target;
  std::string classes = "original,gaussian_blur,median_filter,resample";
  std::string arch;  // optional expected architecture guard
  int64_t n_ip = 1000, n_dp = 1000;
  uint64_t seed = 1;
  double threshold = 0.5;
};

int run_eval(const EvalArgs& a) {
  const Checkpoint ckpt = a.arch.empty()
                              ? load_checkpoint(a.checkpoint)
                              : load_checkpoint(a.checkpoint, ArchConfig::by_name(a.arch));
  SiameseModel<float> model;
  model_from_checkpoint(ckpt, model);

  const Manifest m = load_manifest(a.manifest);
  const std::string corpus_dir =
      a.corpus_dir.empty() ? fs::path(a.manifest).parent_path().string() : a.corpus_dir;
  PatchStore store(m, corpus_dir);

  EvalReport report;
  if (a.protocol == "pairs") {
    require(!a.pairs.empty(), "--pairs required for protocol=pairs");
    report = evaluate(model, store, load_pairs(a.pairs), a.threshold);
  } else {
    require(!a.splits.empty(), "--splits required for protocol evaluation");
    require(!a.target.empty(), "--target required for protocol evaluation");
    const SplitPlan plan = load_splits(a.splits);
    const ManipKind target = manip_kind_from_name(a.target);
    std::vector<ManipKind> others;
    for (ManipKind c : parse_classes(a.classes))
      if (c != target) others.push_back(c);
    if (a.protocol == "per-class") {
      report = per_class_eval(model, store, m, target, others, a.n_ip, a.n_dp, plan.test_ids,
                              a.seed, a.threshold);
    } else if (a.protocol == "generalization") {
      report = generalization_eval(model, ckpt.training_classes, store, m, target,
                                   parse_classes(a.classes), a.n_ip, a.n_dp, plan.test_ids,
                                   a.seed, a.threshold);
    } else {
      throw ParamError("unknown protocol '" + a.protocol + "'");
    }
  }

  const std::string json = report_to_json(report);
  if (!a.out.empty()) {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw IoError("cannot write report: " + a.out);
    out << json << "\n";
  }
  std::cout << json << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// infer / analyze / report
// ---------------------------------------------------------------------------
Patch load_patch_for_infer(const std::string& path, int64_t patch) {
  const Gray8 img = load_green_channel(path);
  require(img.height >= patch && img.width >= patch,
          path + " is smaller than the model patch size " + std::to_string(patch));
  // center crop
  Patch p(static_cast<int>(patch), static_cast<int>(patch));
  const int r0 = (img.height - static_cast<int>(patch)) / 2;
  const int c0 = (img.width - static_cast<int>(patch)) / 2;
  for (int r = 0; r < patch; ++r)
    for (int c = 0; c < patch; ++c) p.at(r, c) = img.at(r0 + r, c0 + c);
  return p;
}

int run_infer(const std::string& checkpoint, const std::string& file_a,
              const std::string& file_b, double threshold) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  SiameseModel<float> model;
  model_from_checkpoint(ckpt, model);
  const Patch a = load_patch_for_infer(file_a, ckpt.arch.patch);
  const Patch b = load_patch_for_infer(file_b, ckpt.arch.patch);
  Tensor<float> x;
  load_patches({&a, &b}, x);
  Tensor<float> f = model.features(x);
  const double p = model.probability(f.ptr(), f.ptr() + ckpt.arch.feature_dim);
  std::cout << "p=" << p << " verdict=" << (predict_ip(p, threshold) ? "IP" : "DP") << "\n";
  return 0;
}

int run_analyze(const std::string& checkpoint, const std::string& image_path,
                const std::string& out_json, const std::string& heatmap_path) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  SiameseModel<float> model;
  model_from_checkpoint(ckpt, model);
  SourceImage img;
  img.id = fs::path(image_path).stem().string();
  img.origin_path = image_path;
  img.pixels = load_green_channel(image_path);
  const ConsistencyMap m = consistency_map(model, img, static_cast<int>(ckpt.arch.patch));
  const std::string json = consistency_to_json(m);
  if (!out_json.empty()) {
    std::ofstream out(out_json, std::ios::binary);
    if (!out) throw IoError("cannot write map: " + out_json);
    out << json << "\n";
    std::cout << "map: " << out_json << "\n";
  } else {
    std::cout << json << "\n";
  }
  if (!heatmap_path.empty()) {
    save_png(consistency_heatmap(m), heatmap_path);
    std::cout << "heatmap: " << heatmap_path << "\n";
  }
  double off_diag_mean = 0;
  int64_t n_off = 0;
  for (int i = 0; i < m.n(); ++i)
    for (int j = 0; j < m.n(); ++j)
      if (i != j) {
        off_diag_mean += m.at(i, j);
        ++n_off;
      }
  if (n_off > 0)
    std::cout << "mean off-diagonal IP probability: " << off_diag_mean / n_off << "\n";
  return 0;
}

int run_report(const std::string& curves, const std::string& out) {
  render_curve_plot(load_curve_csv(curves), out);
  std::cout << "plot: " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Siamese patch-pair manipulation detector pipeline"};
  app.footer(kExitCodeTable);
  app.require_subcommand(1);

  SynthArgs synth;
  auto* cmd_synth = app.add_subcommand("synth", "Synthesize the manipulation corpus");
  cmd_synth->add_option("--input-dir", synth.input_dir, "Directory of source images")
      ->required();
  cmd_synth->add_option("--out-dir", synth.out_dir, "Corpus output directory")->required();
  cmd_synth->add_option("--seed", synth.seed, "Corpus seed")->capture_default_str();
  cmd_synth->add_option("--patch-size", synth.patch_size, "Square patch size")
      ->capture_default_str();
  cmd_synth->add_option("--jpeg-quality", synth.jpeg_quality, "Ingest JPEG quality factor")
      ->capture_default_str();
  cmd_synth->add_option("--classes", synth.classes, "Comma-separated manipulation classes")
      ->capture_default_str();
  cmd_synth->add_option("--per-image-cap", synth.per_image_cap,
                        "Keep only the first N tiles per source (0 = all)")
      ->capture_default_str();
  cmd_synth->add_flag("--no-jpeg", synth.no_jpeg, "Bypass the JPEG round trip at ingest");
  cmd_synth->add_option("--make-demo-sources", synth.make_demo_sources,
                        "Generate N synthetic source images when the input dir is empty")
      ->capture_default_str();

  PairsArgs pairs;
  auto* cmd_pairs = app.add_subcommand("pairs", "Sample IP/DP pair lists");
  cmd_pairs->add_option("--manifest", pairs.manifest, "Corpus manifest")->required();
  cmd_pairs->add_option("--out-dir", pairs.out_dir, "Pair file output directory")->required();
  cmd_pairs->add_option("--split-spec", pairs.split_spec,
                        "Per-class crop counts train/val/test, e.g. 2000/250/500")
      ->capture_default_str();
  cmd_pairs->add_option("--splits", pairs.splits_path,
                        "Path to splits.json (reused when it exists)");
  cmd_pairs->add_option("--classes", pairs.classes, "Training classes")->capture_default_str();
  cmd_pairs->add_option("--n-ip", pairs.n_ip, "IP pair count")->capture_default_str();
  cmd_pairs->add_option("--n-dp", pairs.n_dp, "DP pair count")->capture_default_str();
  cmd_pairs->add_option("--n-ip-val", pairs.n_ip_val, "Val IP pairs (default n-ip/50)");
  cmd_pairs->add_option("--n-dp-val", pairs.n_dp_val, "Val DP pairs (default n-dp/50)");
  cmd_pairs->add_option("--n-ip-test", pairs.n_ip_test, "Test IP pairs (default n-ip/10)");
  cmd_pairs->add_option("--n-dp-test", pairs.n_dp_test, "Test DP pairs (default n-dp/10)");
  cmd_pairs->add_option("--seed", pairs.seed, "Sampling seed")->capture_default_str();
  cmd_pairs->add_option("--protocol", pairs.protocol, "mixed | per-class | generalization")
      ->capture_default_str();
  cmd_pairs->add_option("--target", pairs.target, "Target class for protocol modes");

  TrainArgs train_args;
  TrainConfig flag_cfg;
  auto* cmd_train = app.add_subcommand("train", "Train the siamese network");
  cmd_train->add_option("--manifest", train_args.manifest, "Corpus manifest")->required();
  cmd_train->add_option("--corpus-dir", train_args.corpus_dir,
                        "Patch store directory (default: manifest directory)");
  cmd_train->add_option("--train-pairs", train_args.train_pairs, "Training pair file")
      ->required();
  cmd_train->add_option("--val-pairs", train_args.val_pairs, "Validation pair file");
  cmd_train->add_option("--out-dir", train_args.out_dir, "Run output directory")->required();
  cmd_train->add_option("--arch", train_args.arch, "Architecture: default | tiny")
      ->capture_default_str();
  cmd_train->add_option("--config", train_args.config_path,
                        "Config file (key = value, flags override)");
  auto* o_lr = cmd_train->add_option("--learning-rate", flag_cfg.learning_rate, "0.002");
  auto* o_mu = cmd_train->add_option("--momentum", flag_cfg.momentum, "0.002");
  auto* o_dec = cmd_train->add_option("--lr-decay", flag_cfg.lr_decay, "0.005");
  auto* o_l2 = cmd_train->add_option("--l2", flag_cfg.l2, "0.0001");
  auto* o_bs = cmd_train->add_option("--batch-size", flag_cfg.batch_size, "16");
  auto* o_it = cmd_train->add_option("--max-iterations", flag_cfg.max_iterations, "5000");
  std::string opt_name = "NADAM";
  auto* o_opt = cmd_train->add_option("--optimizer", opt_name, "NADAM | SGD_MOMENTUM");
  auto* o_ev = cmd_train->add_option("--eval-every", flag_cfg.eval_every, "250");
  auto* o_seed = cmd_train->add_option("--seed", flag_cfg.seed, "1");
  auto* o_pat =
      cmd_train->add_option("--patience", flag_cfg.early_stop_patience,
                            "Early-stop patience in evals (0 disables)");

  EvalArgs eval_args;
  auto* cmd_eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  cmd_eval->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint file")->required();
  cmd_eval->add_option("--manifest", eval_args.manifest, "Corpus manifest")->required();
  cmd_eval->add_option("--corpus-dir", eval_args.corpus_dir, "Patch store directory");
  cmd_eval->add_option("--pairs", eval_args.pairs, "Pair file (protocol=pairs)");
  cmd_eval->add_option("--splits", eval_args.splits, "splits.json (protocol modes)");
  cmd_eval->add_option("--protocol", eval_args.protocol,
                       "pairs | per-class | generalization")
      ->capture_default_str();
  cmd_eval->add_option("--target", eval_args.target, "Target class for protocol modes");
  cmd_eval->add_option("--classes", eval_args.classes, "Training classes")
      ->capture_default_str();
  cmd_eval->add_option("--n-ip", eval_args.n_ip, "Protocol IP pair count")
      ->capture_default_str();
  cmd_eval->add_option("--n-dp", eval_args.n_dp, "Protocol DP pair count")
      ->capture_default_str();
  cmd_eval->add_option("--seed", eval_args.seed, "Protocol sampling seed")
      ->capture_default_str();
  cmd_eval->add_option("--threshold", eval_args.threshold, "Decision threshold")
      ->capture_default_str();
  cmd_eval->add_option("--arch", eval_args.arch,
                       "Expected architecture; mismatching checkpoints are refused");
  cmd_eval->add_option("--out", eval_args.out, "Write the JSON report here");

  std::string infer_ckpt, infer_a, infer_b;
  double infer_threshold = 0.5;
  auto* cmd_infer = app.add_subcommand("infer", "Score one patch pair from two image files");
  cmd_infer->add_option("--checkpoint", infer_ckpt, "Checkpoint file")->required();
  cmd_infer->add_option("--a", infer_a, "First image")->required();
  cmd_infer->add_option("--b", infer_b, "Second image")->required();
  cmd_infer->add_option("--threshold", infer_threshold, "Decision threshold")
      ->capture_default_str();

  std::string an_ckpt, an_image, an_out, an_heatmap;
  auto* cmd_analyze =
      app.add_subcommand("analyze", "Patch-consistency map over one image");
  cmd_analyze->add_option("--checkpoint", an_ckpt, "Checkpoint file")->required();
  cmd_analyze->add_option("--image", an_image, "Image to analyze")->required();
  cmd_analyze->add_option("--out", an_out, "Write the JSON matrix here");
  cmd_analyze->add_option("--heatmap", an_heatmap, "Write a grayscale heatmap PNG here");

  std::string rep_curves, rep_out = "curves.png";
  auto* cmd_report = app.add_subcommand("report", "Render a curve CSV to a plot image");
  cmd_report->add_option("--curves", rep_curves, "curve.csv from a training run")->required();
  cmd_report->add_option("--out", rep_out, "Output image")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: USAGE: " << e.what() << "\n";
    return 2;
  }

  try {
    if (app.got_subcommand(cmd_synth)) return run_synth(synth);
    if (app.got_subcommand(cmd_pairs)) return run_pairs(pairs);
    if (app.got_subcommand(cmd_train)) {
      flag_cfg.optimizer = optimizer_from_name(opt_name);
      const std::map<std::string, bool> given{
          {"lr", o_lr->count() > 0},          {"momentum", o_mu->count() > 0},
          {"lr_decay", o_dec->count() > 0},   {"l2", o_l2->count() > 0},
          {"batch_size", o_bs->count() > 0},  {"max_iterations", o_it->count() > 0},
          {"optimizer", o_opt->count() > 0},  {"eval_every", o_ev->count() > 0},
          {"seed", o_seed->count() > 0},      {"patience", o_pat->count() > 0},
      };
      return run_train(train_args, flag_cfg, given);
    }
    if (app.got_subcommand(cmd_eval)) return run_eval(eval_args);
    if (app.got_subcommand(cmd_infer))
      return run_infer(infer_ckpt, infer_a, infer_b, infer_threshold);
    if (app.got_subcommand(cmd_analyze)) return run_analyze(an_ckpt, an_image, an_out, an_heatmap);
    if (app.got_subcommand(cmd_report)) return run_report(rep_curves, rep_out);
  } catch (const Error& e) {
    std::cerr << "error: " << category_name(e.category()) << ": " << e.what() << "\n";
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: INTERNAL: " << e.what() << "\n";
    return 10;
  }
  return 0;
}
