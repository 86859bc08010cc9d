#include "ipdp/train/trainer.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace ipdp {

void TrainConfig::validate() const {
  require(learning_rate > 0, "learning_rate must be > 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(l2 >= 0, "l2 must be >= 0");
  require(max_iterations >= 1, "max_iterations must be >= 1");
  require(eval_every >= 1, "eval_every must be >= 1");
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  TrainConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (blank) continue;
      throw ParamError("config line " + std::to_string(lineno) + " is not `key = value`");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "learning_rate") c.learning_rate = std::stod(value);
      else if (key == "momentum") c.momentum = std::stod(value);
      else if (key == "lr_decay") c.lr_decay = std::stod(value);
      else if (key == "l2") c.l2 = std::stod(value);
      else if (key == "batch_size") c.batch_size = std::stoll(value);
      else if (key == "max_iterations") c.max_iterations = std::stoll(value);
      else if (key == "optimizer") c.optimizer = optimizer_from_name(value);
      else if (key == "eval_every") c.eval_every = std::stoll(value);
      else if (key == "seed") c.seed = std::stoull(value);
      else if (key == "nadam_beta1") c.nadam_beta1 = std::stod(value);
      else if (key == "nadam_beta2") c.nadam_beta2 = std::stod(value);
      else if (key == "nadam_eps") c.nadam_eps = std::stod(value);
      else if (key == "early_stop_patience") c.early_stop_patience = std::stoll(value);
      else throw ParamError("unknown config key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ParamError("bad value for config key '" + key + "': " + value);
    }
  }
  return c;
}

void save_train_config(const TrainConfig& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config: " + path);
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "learning_rate = " << num(c.learning_rate) << "\n"
      << "momentum = " << num(c.momentum) << "\n"
      << "lr_decay = " << num(c.lr_decay) << "\n"
      << "l2 = " << num(c.l2) << "\n"
      << "batch_size = " << c.batch_size << "\n"
      << "max_iterations = " << c.max_iterations << "\n"
      << "optimizer = " << optimizer_name(c.optimizer) << "\n"
      << "eval_every = " << c.eval_every << "\n"
      << "seed = " << c.seed << "\n"
      << "nadam_beta1 = " << num(c.nadam_beta1) << "\n"
      << "nadam_beta2 = " << num(c.nadam_beta2) << "\n"
      << "nadam_eps = " << num(c.nadam_eps) << "\n"
      << "early_stop_patience = " << c.early_stop_patience << "\n";
}

void save_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write curve csv: " + path);
  out << "iteration,train_loss,train_acc,val_loss,val_acc\n";
  char buf[256];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%" PRId64 ",%.9g,%.9g,%.9g,%.9g\n", p.iteration,
                  p.train_loss, p.train_acc, p.val_loss, p.val_acc);
    out << buf;
  }
  if (!out) throw IoError("curve csv write failed: " + path);
}

namespace {

// Resolve pair lists to patch pointers once; every batch then indexes into
// this flat view.
struct ResolvedPairs {
  std::vector<const Patch*> a, b;
  std::vector<float> label;
};

ResolvedPairs resolve(PatchStore& store, const std::vector<PairSample>& pairs) {
  ResolvedPairs out;
  out.a.reserve(pairs.size());
  out.b.reserve(pairs.size());
  out.label.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.a.push_back(&store.load(p.a));
    out.b.push_back(&store.load(p.b));
    out.label.push_back(p.label ? 1.0f : 0.0f);
  }
  return out;
}

void fill_batch(const ResolvedPairs& rp, const std::vector<size_t>& idx, Tensor<float>& x,
                std::vector<float>& labels) {
  const int64_t B = static_cast<int64_t>(idx.size());
  std::vector<const Patch*> side(static_cast<size_t>(2 * B));
  labels.resize(static_cast<size_t>(B));
  for (int64_t i = 0; i < B; ++i) {
    side[static_cast<size_t>(i)] = rp.a[idx[static_cast<size_t>(i)]];
    side[static_cast<size_t>(B + i)] = rp.b[idx[static_cast<size_t>(i)]];
    labels[static_cast<size_t>(i)] = rp.label[idx[static_cast<size_t>(i)]];
  }
  load_patches(side, x);
}

Checkpoint snapshot(SiameseModel<float>& model, const TrainConfig& config,
                    const std::vector<std::string>& classes, int64_t iteration,
                    SgdMomentum<float>* sgd, Nadam<float>* nadam,
                    const std::vector<ParamSlot<float>>& slots) {
  Checkpoint ckpt;
  model_to_checkpoint(model, ckpt);
  ckpt.training_classes = classes;
  ckpt.iteration = iteration;
  ckpt.optimizer = optimizer_name(config.optimizer);
  if (nadam) {
    ckpt.opt_step = nadam->t;
    for (size_t k = 0; k < slots.size(); ++k) {
      ckpt.tensors["nadam.m." + slots[k].name] = nadam->m[k];
      ckpt.tensors["nadam.v." + slots[k].name] = nadam->v[k];
    }
  }
  if (sgd) {
    for (size_t k = 0; k < slots.size(); ++k)
      ckpt.tensors["sgd.velocity." + slots[k].name] = sgd->velocity[k];
  }
  return ckpt;
}

}  // namespace

std::pair<double, double> evaluate_pairs_loss_acc(SiameseModel<float>& model, PatchStore& store,
                                                  const std::vector<PairSample>& pairs,
                                                  int64_t batch_size) {
  ResolvedPairs rp = resolve(store, pairs);
  const int64_t n = static_cast<int64_t>(pairs.size());
  double loss = 0;
  int64_t correct = 0;
  Tensor<float> x;
  std::vector<float> labels;
  for (int64_t at = 0; at < n; at += batch_size) {
    const int64_t count = std::min(batch_size, n - at);
    std::vector<size_t> idx(static_cast<size_t>(count));
    for (int64_t i = 0; i < count; ++i) idx[static_cast<size_t>(i)] = static_cast<size_t>(at + i);
    fill_batch(rp, idx, x, labels);
    const auto& probs = model.forward_pairs(x, /*train=*/false, 0);
    for (int64_t i = 0; i < count; ++i) {
      const float p = probs[static_cast<size_t>(i)];
      const float y = labels[static_cast<size_t>(i)];
      loss += bce_loss(static_cast<double>(p), static_cast<double>(y));
      const bool ip = predict_ip(p);
      if (ip == (y > 0.5f)) ++correct;
    }
  }
  return {loss / static_cast<double>(n), static_cast<double>(correct) / static_cast<double>(n)};
}

TrainResult train(const ArchConfig& arch, const TrainConfig& config, const Manifest& manifest,
                  PatchStore& store, const std::vector<PairSample>& train_pairs,
                  const std::vector<PairSample>& val_pairs, const std::string& out_dir,
                  const IterationHook& hook) {
  config.validate();
  arch.validate();
  require(!train_pairs.empty(), "no training pairs");
  fs::create_directories(out_dir);

  // Resolve every reference before the first step.
  store.preload_pairs(train_pairs.begin(), train_pairs.end());
  store.preload_pairs(val_pairs.begin(), val_pairs.end());
  ResolvedPairs rp = resolve(store, train_pairs);

  std::set<std::string> class_set;
  for (const auto& p : train_pairs) {
    class_set.insert(manip_kind_name(manifest.record(p.a).klass));
    class_set.insert(manip_kind_name(manifest.record(p.b).klass));
  }
  const std::vector<std::string> classes(class_set.begin(), class_set.end());

  SiameseModel<float> model;
  model.configure(arch);
  model.init(config.seed);

  auto slots = model.params();
  SgdMomentum<float> sgd;
  Nadam<float> nadam;
  nadam.beta1 = static_cast<float>(config.nadam_beta1);
  nadam.beta2 = static_cast<float>(config.nadam_beta2);
  nadam.eps = static_cast<float>(config.nadam_eps);
  const bool use_nadam = config.optimizer == OptimizerKind::kNadam;
  if (use_nadam)
    nadam.attach(slots);
  else
    sgd.attach(slots);

  Rng rescue_rng(splitmix64(config.seed ^ 0xF117E12ULL));

  TrainResult result;
  std::vector<size_t> order(train_pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  size_t cursor = 0;
  int64_t epoch = 0;
  Rng(splitmix64(config.seed + kGolden)).shuffle(order);

  Tensor<float> x;
  std::vector<float> labels;
  double window_loss = 0, window_acc = 0;
  int64_t window_n = 0;

  double best_val_loss = std::numeric_limits<double>::infinity();
  Checkpoint best_ckpt;
  bool have_best = false;
  int64_t stall = 0;

  const fs::path final_path = fs::path(out_dir) / "final.ckpt";
  const fs::path best_path = fs::path(out_dir) / "best.ckpt";
  const fs::path curve_path = fs::path(out_dir) / "curve.csv";

  int64_t iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    std::vector<size_t> idx(static_cast<size_t>(config.batch_size));
    for (int64_t i = 0; i < config.batch_size; ++i) {
      if (cursor >= order.size()) {
        cursor = 0;
        ++epoch;
        Rng(splitmix64(config.seed + kGolden * static_cast<uint64_t>(epoch + 1))).shuffle(order);
      }
      idx[static_cast<size_t>(i)] = order[cursor++];
    }
    fill_batch(rp, idx, x, labels);

    const uint64_t dropout_seed = splitmix64(config.seed + static_cast<uint64_t>(iter + 1));
    const auto& probs = model.forward_pairs(x, /*train=*/true, dropout_seed);

    int64_t correct = 0;
    for (size_t i = 0; i < probs.size(); ++i)
      if (predict_ip(probs[i]) == (labels[i] > 0.5f)) ++correct;

    model.zero_grads();
    const float loss = model.backward_pairs(labels);
    std::string numeric_problem;
    if (!std::isfinite(loss)) numeric_problem = "non-finite loss";
    try {
      for (size_t k = 0; numeric_problem.empty() && k < slots.size(); ++k)
        check_finite(*slots[k].grad, slots[k].name);
    } catch (const NumericError& e) {
      numeric_problem = e.what();
    }
    if (!numeric_problem.empty()) {
      // nothing was stepped yet: params are still last-good
      Checkpoint last_good = snapshot(model, config, classes, iter, use_nadam ? nullptr : &sgd,
                                      use_nadam ? &nadam : nullptr, slots);
      save_checkpoint(last_good, (fs::path(out_dir) / "last_good.ckpt").string());
      throw NumericError(numeric_problem + " at iteration " + std::to_string(iter) +
                         "; last-good checkpoint saved");
    }

    const float lr = effective_lr(static_cast<float>(config.learning_rate),
                                  static_cast<float>(config.lr_decay), iter);
    if (use_nadam)
      nadam.step(slots, lr, static_cast<float>(config.l2));
    else
      sgd.step(slots, lr, static_cast<float>(config.momentum), static_cast<float>(config.l2));

    project_bank_rescue(model.tower.conv1.w, rescue_rng, &result.events);
    const auto dev = bank_deviation(model.tower.conv1.w);
    if (dev.max_center != 0.0 || dev.max_off_sum > 1e-5)
      throw NumericError("constraint projection failed: center dev " +
                         std::to_string(dev.max_center) + ", off-sum dev " +
                         std::to_string(dev.max_off_sum));

    window_loss += loss;
    window_acc += static_cast<double>(correct) / static_cast<double>(probs.size());
    window_n += 1;

    const bool tick = ((iter + 1) % config.eval_every == 0) || (iter + 1 == config.max_iterations);
    if (tick) {
      CurvePoint pt;
      pt.iteration = iter + 1;
      pt.train_loss = window_loss / static_cast<double>(window_n);
      pt.train_acc = window_acc / static_cast<double>(window_n);
      window_loss = window_acc = 0;
      window_n = 0;
      if (!val_pairs.empty()) {
        auto [vl, va] = evaluate_pairs_loss_acc(model, store, val_pairs,
                                                std::max<int64_t>(config.batch_size, 16));
        pt.val_loss = vl;
        pt.val_acc = va;
        if (vl < best_val_loss) {
          best_val_loss = vl;
          best_ckpt = snapshot(model, config, classes, iter + 1, use_nadam ? nullptr : &sgd,
                               use_nadam ? &nadam : nullptr, slots);
          have_best = true;
          stall = 0;
        } else {
          ++stall;
        }
      }
      result.curve.push_back(pt);
      if (hook && !hook(iter + 1, model)) {
        ++iter;
        break;
      }
      if (config.early_stop_patience > 0 && !val_pairs.empty() &&
          stall >= config.early_stop_patience) {
        ++iter;
        break;
      }
    } else if (hook && !hook(iter + 1, model)) {
      ++iter;
      break;
    }
  }
  result.iterations_run = iter;

  Checkpoint final_ckpt = snapshot(model, config, classes, iter, use_nadam ? nullptr : &sgd,
                                   use_nadam ? &nadam : nullptr, slots);
  save_checkpoint(final_ckpt, final_path.string());
  if (!have_best) best_ckpt = final_ckpt;
  save_checkpoint(best_ckpt, best_path.string());
  save_curve_csv(result.curve, curve_path.string());

  result.final_checkpoint = final_path.string();
  result.best_checkpoint = best_path.string();
  result.curve_csv = curve_path.string();
  return result;
}

}  // namespace ipdp
