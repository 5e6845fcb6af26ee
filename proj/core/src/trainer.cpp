#include "resmix/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "resmix/audit.hpp"
#include "resmix/checkpoint.hpp"
#include "resmix/error.hpp"
#include "resmix/ops.hpp"
#include "resmix/rng.hpp"

namespace resmix::train {

// --- config -------------------------------------------------------------------

void TrainConfig::validate() const {
  model.validate();
  if (batch_size < 1) throw ValidationError("batch_size must be positive");
  if (eval_batch_size < 1) throw ValidationError("eval_batch_size must be positive");
  if (epochs < 1) throw ValidationError("epochs must be positive");
  if (lr_decay_factor <= 0) throw ValidationError("lr_decay_factor must be positive");
  if (eval_threads < 1) throw ValidationError("eval_threads must be positive");
  for (std::size_t i = 0; i < lr_milestones.size(); ++i) {
    if (lr_milestones[i] < 0 || lr_milestones[i] >= epochs) {
      throw ValidationError("lr milestone " + std::to_string(lr_milestones[i]) + " must lie in [0, " +
                            std::to_string(epochs) + ")");
    }
    if (i > 0 && lr_milestones[i] <= lr_milestones[i - 1]) {
      throw ValidationError("lr_milestones must be strictly increasing");
    }
  }
  optimizer(0).validate();
}

OptimizerConfig TrainConfig::optimizer(int epoch) const {
  OptimizerConfig o;
  o.learning_rate = lr_at_epoch(*this, epoch);
  o.momentum = momentum;
  o.weight_decay = weight_decay;
  o.decay_all = decay_all;
  return o;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"model", model.to_json()},
          {"batch_size", batch_size},
          {"eval_batch_size", eval_batch_size},
          {"learning_rate", learning_rate},
          {"momentum", momentum},
          {"weight_decay", weight_decay},
          {"decay_all", decay_all},
          {"epochs", epochs},
          {"lr_milestones", lr_milestones},
          {"lr_decay_factor", lr_decay_factor},
          {"seed", seed},
          {"train_path", train_path},
          {"val_path", val_path},
          {"test_path", test_path},
          {"train_limit", train_limit},
          {"val_limit", val_limit},
          {"test_limit", test_limit},
          {"log_wall_time", log_wall_time},
          {"skip_audit", skip_audit},
          {"eval_threads", eval_threads}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  const nlohmann::json defaults = c.to_json();
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw ValidationError("unknown train config key '" + key + "'");
  }
  try {
    if (j.contains("model")) c.model = nn::ModelConfig::from_json(j["model"]);
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("batch_size", c.batch_size);
    get("eval_batch_size", c.eval_batch_size);
    get("learning_rate", c.learning_rate);
    get("momentum", c.momentum);
    get("weight_decay", c.weight_decay);
    get("decay_all", c.decay_all);
    get("epochs", c.epochs);
    get("lr_milestones", c.lr_milestones);
    get("lr_decay_factor", c.lr_decay_factor);
    get("seed", c.seed);
    get("train_path", c.train_path);
    get("val_path", c.val_path);
    get("test_path", c.test_path);
    get("train_limit", c.train_limit);
    get("val_limit", c.val_limit);
    get("test_limit", c.test_limit);
    get("log_wall_time", c.log_wall_time);
    get("skip_audit", c.skip_audit);
    get("eval_threads", c.eval_threads);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  const auto passed = std::count_if(cfg.lr_milestones.begin(), cfg.lr_milestones.end(),
                                    [&](int m) { return m <= epoch; });
  return cfg.learning_rate / std::pow(cfg.lr_decay_factor, static_cast<double>(passed));
}

// --- metrics ------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string metrics_csv_header() { return "epoch,split,loss,error,lr,seconds\n"; }

std::string metrics_csv_row(const EpochMetrics& m) {
  return std::to_string(m.epoch) + "," + m.split + "," + fmt(m.loss) + "," + fmt(m.error) + "," + fmt(m.lr) +
         "," + fmt(m.seconds) + "\n";
}

std::string metrics_csv(std::span<const EpochMetrics> rows) {
  std::string out = metrics_csv_header();
  for (const auto& r : rows) out += metrics_csv_row(r);
  return out;
}

std::vector<EpochMetrics> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line + "\n" != metrics_csv_header()) {
    throw FormatError("metrics CSV: unexpected header");
  }
  std::vector<EpochMetrics> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string f[6];
    for (auto& s : f)
      if (!std::getline(fields, s, ',')) throw FormatError("metrics CSV: short row '" + line + "'");
    EpochMetrics m;
    m.epoch = std::stoi(f[0]);
    m.split = f[1];
    m.loss = std::stod(f[2]);
    m.error = std::stod(f[3]);
    m.lr = std::stod(f[4]);
    m.seconds = std::stod(f[5]);
    rows.push_back(m);
  }
  return rows;
}

// --- data ---------------------------------------------------------------------

template <typename T>
Tensor<T> batch_tensor(const data::Dataset& ds, std::span<const std::size_t> indices) {
  const std::size_t per = ds.image_bytes();
  Tensor<T> x({static_cast<std::int64_t>(indices.size()), ds.channels, ds.height, ds.width});
  T* out = x.ptr();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto img = ds.image(indices[k]);
    for (std::size_t i = 0; i < per; ++i) out[k * per + i] = static_cast<T>(img[i]) / T{255};
  }
  return x;
}

data::Dataset balanced_subset(const data::Dataset& ds, std::uint32_t count) {
  if (count == 0 || count >= ds.size()) return ds;
  const std::size_t want[2] = {count / 2, count - count / 2};
  std::size_t have[2] = {0, 0};
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.size() && keep.size() < count; ++i) {
    const int y = ds.labels[i] ? 1 : 0;
    if (have[y] < want[y]) {
      ++have[y];
      keep.push_back(i);
    }
  }
  if (keep.size() != count) {
    throw ValidationError("cannot draw a balanced subset of " + std::to_string(count) + " samples");
  }
  data::Dataset out;
  out.channels = ds.channels;
  out.height = ds.height;
  out.width = ds.width;
  out.images.reserve(keep.size() * ds.image_bytes());
  for (std::size_t i : keep) {
    out.labels.push_back(ds.labels[i]);
    const auto img = ds.image(i);
    out.images.insert(out.images.end(), img.begin(), img.end());
  }
  if (ds.meta.is_object()) {
    out.meta = ds.meta;
    if (ds.meta.contains("samples")) {
      nlohmann::json samples = nlohmann::json::array();
      for (std::size_t i : keep) samples.push_back(ds.meta["samples"][i]);
      out.meta["samples"] = std::move(samples);
    }
    out.meta["subset_of"] = ds.size();
  }
  return out;
}

// --- evaluation ---------------------------------------------------------------

nlohmann::json EvalResult::to_json() const {
  nlohmann::json g = nlohmann::json::object();
  for (std::size_t m = 0; m < gate_modules.size(); ++m) g[gate_modules[m]] = gates[m];
  return {{"loss", loss},
          {"error", error},
          {"predictions", predictions},
          {"probabilities", probabilities},
          {"gates", std::move(g)}};
}

namespace {

template <typename T>
int predict(const T* row) {
  return row[1] > row[0] ? 1 : 0;
}

struct BatchOutcome {
  double loss_sum = 0;  // loss * batch size
  std::size_t wrong = 0;
  std::vector<int> predictions;
  std::vector<std::array<double, 2>> probabilities;
  std::vector<std::vector<std::vector<double>>> gates;  // [module][sample][E]
  std::vector<std::string> modules;
};

template <typename T>
BatchOutcome eval_batch(const nn::Network<T>& net, const data::Dataset& ds, std::span<const std::size_t> idx,
                        bool collect_gates) {
  Tape<T> tape;
  nn::ForwardTrace trace;
  const Var x = tape.constant(batch_tensor<T>(ds, idx));
  const Var logits = net.forward(tape, x, Mode::Eval, collect_gates ? &trace : nullptr);
  std::vector<int> labels(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) labels[k] = ds.labels[idx[k]];
  const Var loss = log_softmax_nll(tape, logits, std::span<const int>(labels));

  BatchOutcome out;
  out.loss_sum = static_cast<double>(tape.value(loss)[0]) * static_cast<double>(idx.size());
  const Tensor<T>& lv = tape.value(logits);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const T* row = lv.ptr() + 2 * k;
    const int p = predict(row);
    out.predictions.push_back(p);
    if (p != labels[k]) ++out.wrong;
    const auto sm = softmax_row<T>(std::span<const T>(row, 2));
    out.probabilities.push_back({static_cast<double>(sm[0]), static_cast<double>(sm[1])});
  }
  if (collect_gates) {
    out.modules = trace.modules;
    for (const Var g : trace.gates) {
      const Tensor<T>& gv = tape.value(g);
      const auto e = static_cast<std::size_t>(gv.dim(1));
      std::vector<std::vector<double>> rows(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k)
        for (std::size_t i = 0; i < e; ++i) rows[k].push_back(static_cast<double>(gv[k * e + i]));
      out.gates.push_back(std::move(rows));
    }
  }
  return out;
}

}  // namespace

template <typename T>
EvalResult evaluate(const nn::Network<T>& net, const data::Dataset& ds, int batch_size, bool collect_gates,
                    int threads) {
  if (ds.size() == 0) throw ValidationError("cannot evaluate on an empty dataset");
  if (batch_size < 1) throw ValidationError("batch size must be positive");
  const std::size_t bs = static_cast<std::size_t>(batch_size);
  const std::size_t batches = (ds.size() + bs - 1) / bs;
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<BatchOutcome> outcomes(batches);
  std::vector<std::exception_ptr> errors(batches);

  auto run = [&](std::size_t b) {
    try {
      const std::size_t lo = b * bs, hi = std::min(ds.size(), lo + bs);
      outcomes[b] = eval_batch(net, ds, std::span<const std::size_t>(order).subspan(lo, hi - lo), collect_gates);
    } catch (...) {
      errors[b] = std::current_exception();
    }
  };
  const auto workers = static_cast<std::size_t>(std::clamp(threads, 1, 64));
  if (workers == 1) {
    for (std::size_t b = 0; b < batches; ++b) run(b);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t b = w; b < batches; b += workers) run(b);
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  EvalResult r;
  double loss_sum = 0;
  std::size_t wrong = 0;
  for (auto& o : outcomes) {
    loss_sum += o.loss_sum;
    wrong += o.wrong;
    r.predictions.insert(r.predictions.end(), o.predictions.begin(), o.predictions.end());
    r.probabilities.insert(r.probabilities.end(), o.probabilities.begin(), o.probabilities.end());
    if (collect_gates) {
      if (r.gate_modules.empty()) {
        r.gate_modules = o.modules;
        r.gates.resize(o.gates.size());
      }
      for (std::size_t m = 0; m < o.gates.size(); ++m)
        r.gates[m].insert(r.gates[m].end(), o.gates[m].begin(), o.gates[m].end());
    }
  }
  r.loss = loss_sum / static_cast<double>(ds.size());
  r.error = static_cast<double>(wrong) / static_cast<double>(ds.size());
  return r;
}

// --- training -----------------------------------------------------------------

nlohmann::json TrainResult::summary() const {
  nlohmann::json j = {{"first_batch_loss", first_batch_loss},
                      {"best_epoch", best_epoch},
                      {"best_val_error", best_val_error},
                      {"best_val_loss", best_val_loss},
                      {"epochs_run", history.empty() ? 0 : history.back().epoch + 1}};
  if (!history.empty()) {
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
      if (it->split == "train" && !j.contains("final_train_error")) {
        j["final_train_error"] = it->error;
        j["final_train_loss"] = it->loss;
      }
      if (it->split == "val" && !j.contains("final_val_error")) {
        j["final_val_error"] = it->error;
        j["final_val_loss"] = it->loss;
      }
    }
  }
  if (final_test) j["final_test"] = {{"loss", final_test->loss}, {"error", final_test->error}};
  if (best_test) j["best_test"] = {{"loss", best_test->loss}, {"error", best_test->error}};
  return j;
}

namespace {

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = Rng::stream(seed, "shuffle", static_cast<std::uint64_t>(epoch));
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  return perm;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!(out << text)) throw IoError("cannot write " + path.string());
}

nlohmann::json history_json(const std::vector<EpochMetrics>& rows) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& m : rows) a.push_back({m.epoch, m.split, m.loss, m.error, m.lr, m.seconds});
  return a;
}

std::vector<EpochMetrics> history_from(const nlohmann::json& a) {
  std::vector<EpochMetrics> rows;
  for (const auto& r : a) {
    rows.push_back({r[0].get<int>(), r[1].get<std::string>(), r[2].get<double>(), r[3].get<double>(),
                    r[4].get<double>(), r[5].get<double>()});
  }
  return rows;
}

std::unique_ptr<nn::Network<float>> clone(const nn::Network<float>& net, std::uint64_t seed) {
  auto copy = nn::Network<float>::build(net.config(), seed);
  copy->params().copy_state_from(net.params());
  return copy;
}

void check_dims(const data::Dataset& ds, const char* what) {
  if (ds.size() == 0) throw ValidationError(std::string(what) + " set is empty");
  if (ds.channels != 3) throw ValidationError(std::string(what) + " set must have 3 channels");
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const data::Dataset& train_set, const data::Dataset& val_set,
                  const data::Dataset* test_set, const TrainOptions& opts) {
  cfg.validate();
  check_dims(train_set, "train");
  check_dims(val_set, "validation");
  if (test_set) check_dims(*test_set, "test");
  using clock = std::chrono::steady_clock;

  TrainResult r;
  std::unique_ptr<nn::Network<float>> net;
  int start = 0;
  if (opts.resume) {
    LoadedCheckpoint ck = load_checkpoint(*opts.resume);
    if (!(ck.info.model == cfg.model) || ck.info.seed != cfg.seed) {
      throw ValidationError("checkpoint was written for " + ck.info.model.label() + " seed " +
                            std::to_string(ck.info.seed) + ", not " + cfg.model.label() + " seed " +
                            std::to_string(cfg.seed));
    }
    net = std::move(ck.net);
    start = ck.info.epoch + 1;
    const auto& st = ck.info.state;
    r.history = history_from(st.at("history"));
    r.first_batch_loss = st.at("first_batch_loss").get<double>();
    r.best_epoch = st.at("best_epoch").get<int>();
    r.best_val_error = st.at("best_val_error").get<double>();
    r.best_val_loss = st.at("best_val_loss").get<double>();
    const auto best_path = opts.resume->parent_path() / "best.ckpt";
    if (r.best_epoch == ck.info.epoch) {
      r.best_model = clone(*net, cfg.seed);
    } else if (r.best_epoch >= 0 && std::filesystem::exists(best_path)) {
      r.best_model = std::move(load_checkpoint(best_path).net);
    }
  } else {
    net = nn::Network<float>::build(cfg.model, cfg.seed);
  }

  if (opts.out_dir) std::filesystem::create_directories(*opts.out_dir);
  const std::size_t n = train_set.size();
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  const int stop = std::min(cfg.epochs, opts.stop_after.value_or(cfg.epochs));

  bool stopped_early = false;
  for (int epoch = start; epoch < stop; ++epoch) {
    const auto t0 = clock::now();
    const OptimizerConfig opt = cfg.optimizer(epoch);
    const std::vector<std::size_t> perm = shuffled(n, cfg.seed, epoch);
    double loss_sum = 0;
    std::size_t wrong = 0;
    std::vector<int> labels;
    for (std::size_t lo = 0, batch = 0; lo < n; lo += bs, ++batch) {
      const std::size_t hi = std::min(n, lo + bs);
      const std::span<const std::size_t> idx(perm.data() + lo, hi - lo);
      labels.assign(idx.size(), 0);
      for (std::size_t k = 0; k < idx.size(); ++k) labels[k] = train_set.labels[idx[k]];

      Tape<float> tape;
      const Var x = tape.constant(batch_tensor<float>(train_set, idx));
      const Var logits = net->forward(tape, x, Mode::Train);
      const Var loss = log_softmax_nll(tape, logits, std::span<const int>(labels));
      const double lv = static_cast<double>(tape.value(loss)[0]);
      if (!std::isfinite(lv)) {
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batch) + " (lr " + fmt(opt.learning_rate) + ")");
      }
      if (epoch == 0 && batch == 0) r.first_batch_loss = lv;
      const Tensor<float>& out = tape.value(logits);
      for (std::size_t k = 0; k < idx.size(); ++k)
        if (predict(out.ptr() + 2 * k) != labels[k]) ++wrong;
      loss_sum += lv * static_cast<double>(idx.size());
      tape.backward(loss);
      sgd_step(net->params(), opt);
    }
    const double train_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    const auto t1 = clock::now();
    const EvalResult val = evaluate(*net, val_set, cfg.eval_batch_size, false, cfg.eval_threads);
    const double val_seconds = std::chrono::duration<double>(clock::now() - t1).count();

    const EpochMetrics tr{epoch, "train", loss_sum / static_cast<double>(n),
                          static_cast<double>(wrong) / static_cast<double>(n), opt.learning_rate,
                          cfg.log_wall_time ? train_seconds : 0.0};
    const EpochMetrics va{epoch, "val", val.loss, val.error, opt.learning_rate,
                          cfg.log_wall_time ? val_seconds : 0.0};
    r.history.push_back(tr);
    r.history.push_back(va);
    if (opts.on_epoch) {
      opts.on_epoch(tr);
      opts.on_epoch(va);
    }

    const bool better = r.best_epoch < 0 || val.error < r.best_val_error ||
                        (val.error == r.best_val_error && val.loss < r.best_val_loss);
    if (better) {
      r.best_epoch = epoch;
      r.best_val_error = val.error;
      r.best_val_loss = val.loss;
      r.best_model = clone(*net, cfg.seed);
    }

    if (opts.out_dir) {
      CheckpointInfo info{cfg.model, epoch, cfg.seed,
                          {{"history", history_json(r.history)},
                           {"first_batch_loss", r.first_batch_loss},
                           {"best_epoch", r.best_epoch},
                           {"best_val_error", r.best_val_error},
                           {"best_val_loss", r.best_val_loss},
                           {"train_config", cfg.to_json()}}};
      write_text(*opts.out_dir / "metrics.csv", metrics_csv(r.history));
      save_checkpoint(*opts.out_dir / "last.ckpt", *net, info);
      if (better) save_checkpoint(*opts.out_dir / "best.ckpt", *net, info);
    }
    if (opts.stop_when && opts.stop_when(tr)) {
      stopped_early = true;
      break;
    }
  }

  const bool finished = stop == cfg.epochs || stopped_early;
  if (test_set && finished) {
    const EvalResult ft = evaluate(*net, *test_set, cfg.eval_batch_size, false, cfg.eval_threads);
    r.final_test = SplitScore{ft.loss, ft.error};
    if (r.best_model) {
      const EvalResult bt = evaluate(*r.best_model, *test_set, cfg.eval_batch_size, false, cfg.eval_threads);
      r.best_test = SplitScore{bt.loss, bt.error};
    }
  }
  r.final_model = std::move(net);
  if (opts.out_dir) write_text(*opts.out_dir / "summary.json", r.summary().dump(2) + "\n");
  return r;
}

namespace {

data::Dataset load_split(const std::string& path, std::uint32_t limit, bool audit, const char* what) {
  if (path.empty()) throw ValidationError(std::string(what) + "_path is not set");
  data::Dataset ds = data::read_dataset(path);
  if (audit) {
    if (ds.meta.is_null()) {
      throw ValidationError(std::string(what) + " set " + path +
                            " has no metadata sidecar, so it cannot be audited (set skip_audit to override)");
    }
    const verify::AuditReport rep = verify::audit_dataset(ds);
    if (!rep.pass()) {
      throw ValidationError(std::string(what) + " set " + path + " failed its audit: " + rep.summary() +
                            " (set skip_audit to override)");
    }
  }
  return balanced_subset(ds, limit);
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  const bool audit = !cfg.skip_audit;
  const data::Dataset tr = load_split(cfg.train_path, cfg.train_limit, audit, "train");
  const data::Dataset va = load_split(cfg.val_path, cfg.val_limit, audit, "val");
  std::optional<data::Dataset> te;
  if (!cfg.test_path.empty()) te = load_split(cfg.test_path, cfg.test_limit, audit, "test");
  return train(cfg, tr, va, te ? &*te : nullptr, opts);
}

// --- sweeps -------------------------------------------------------------------

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0;
  const double m = mean_of(xs);
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

SweepSummary summarize_sweep(const nn::ModelConfig& model, std::vector<SweepCell> cells) {
  SweepSummary s;
  s.model = model.label();
  s.param_count = nn::count_params(model).total;
  std::vector<double> lrs;
  for (const auto& c : cells)
    if (std::find(lrs.begin(), lrs.end(), c.learning_rate) == lrs.end()) lrs.push_back(c.learning_rate);
  for (double lr : lrs) {
    SweepRow row;
    row.learning_rate = lr;
    for (const auto& c : cells) {
      if (c.learning_rate != lr) continue;
      if (!c.ok) {
        ++row.failures;
        continue;
      }
      row.test_errors.push_back(c.best_test_error);
      row.final_test_errors.push_back(c.final_test_error);
    }
    row.mean = mean_of(row.test_errors);
    row.std = sample_std(row.test_errors);
    if (!row.test_errors.empty() &&
        (!s.best_learning_rate || row.mean < std::find_if(s.rows.begin(), s.rows.end(), [&](const SweepRow& x) {
                                               return x.learning_rate == *s.best_learning_rate;
                                             })->mean)) {
      s.best_learning_rate = lr;
    }
    s.rows.push_back(std::move(row));
  }
  s.cells = std::move(cells);
  return s;
}

nlohmann::json SweepSummary::to_json() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_j.push_back({{"learning_rate", r.learning_rate},
                      {"test_errors", r.test_errors},
                      {"final_test_errors", r.final_test_errors},
                      {"mean", r.mean},
                      {"std", r.std},
                      {"failures", r.failures}});
  }
  nlohmann::json cells_j = nlohmann::json::array();
  for (const auto& c : cells) {
    cells_j.push_back({{"learning_rate", c.learning_rate},
                       {"seed", c.seed},
                       {"ok", c.ok},
                       {"failure", c.failure},
                       {"best_test_error", c.best_test_error},
                       {"final_test_error", c.final_test_error},
                       {"best_epoch", c.best_epoch}});
  }
  nlohmann::json j = {{"model", model},
                      {"param_count", param_count},
                      {"rows", std::move(rows_j)},
                      {"cells", std::move(cells_j)},
                      {"table_row", table_row()}};
  j["best_learning_rate"] = best_learning_rate ? nlohmann::json(*best_learning_rate) : nlohmann::json();
  return j;
}

std::string SweepSummary::table_row() const {
  char count[32];
  std::snprintf(count, sizeof count, "%.0fK", static_cast<double>(param_count) / 1000.0);
  std::string err = "n/a";
  for (const auto& r : rows) {
    if (best_learning_rate && r.learning_rate == *best_learning_rate) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f ± %.2f%%", 100 * r.mean, 100 * r.std);
      err = buf;
    }
  }
  return model + " | " + count + " | " + err;
}

SweepSummary sweep(const TrainConfig& base, std::span<const double> lrs, std::span<const std::uint64_t> seeds,
                   const std::optional<std::filesystem::path>& out_dir,
                   const std::function<void(const SweepCell&)>& on_cell) {
  if (lrs.empty() || seeds.empty()) throw ValidationError("sweep grid must list at least one LR and one seed");
  if (base.test_path.empty()) throw ValidationError("sweeps report test error, so test_path must be set");
  base.validate();
  const bool audit = !base.skip_audit;
  const data::Dataset tr = load_split(base.train_path, base.train_limit, audit, "train");
  const data::Dataset va = load_split(base.val_path, base.val_limit, audit, "val");
  const data::Dataset te = load_split(base.test_path, base.test_limit, audit, "test");

  std::vector<SweepCell> cells;
  for (double lr : lrs) {
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.learning_rate = lr;
      cfg.seed = seed;
      SweepCell cell;
      cell.learning_rate = lr;
      cell.seed = seed;
      TrainOptions opts;
      if (out_dir) opts.out_dir = *out_dir / ("lr" + fmt(lr) + "-seed" + std::to_string(seed));
      try {
        const TrainResult r = train(cfg, tr, va, &te, opts);
        cell.ok = true;
        cell.best_test_error = r.best_test ? r.best_test->error : 1.0;
        cell.final_test_error = r.final_test ? r.final_test->error : 1.0;
        cell.best_epoch = r.best_epoch;
      } catch (const Error& e) {
        cell.failure = e.what();
      }
      if (on_cell) on_cell(cell);
      cells.push_back(std::move(cell));
    }
  }
  return summarize_sweep(base.model, std::move(cells));
}

// --- presets ------------------------------------------------------------------

std::span<const Preset> presets() {
  static const std::vector<Preset> kPresets = {
      {"table3-resnet26-pentomino", nn::ModelConfig::resnet_by_depth(26), "pentomino", 0.1},
      {"table3-resnet50-pentomino", nn::ModelConfig::resnet_by_depth(50), "pentomino", 0.1},
      {"table3-resmix41-pentomino", nn::ModelConfig::resmixnet(4, 1), "pentomino", 0.01},
      {"table3-resnet26-parity", nn::ModelConfig::resnet_by_depth(26), "mnist-parity", 0.05},
      {"table3-resnet50-parity", nn::ModelConfig::resnet_by_depth(50), "mnist-parity", 0.1},
      {"table3-resmix22-parity", nn::ModelConfig::resmixnet(2, 2), "mnist-parity", 0.1},
  };
  return kPresets;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  std::string known;
  for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
  throw ValidationError("unknown preset '" + name + "' (known: " + known + ")");
}

template Tensor<float> batch_tensor<float>(const data::Dataset&, std::span<const std::size_t>);
template Tensor<double> batch_tensor<double>(const data::Dataset&, std::span<const std::size_t>);
template EvalResult evaluate<float>(const nn::Network<float>&, const data::Dataset&, int, bool, int);
template EvalResult evaluate<double>(const nn::Network<double>&, const data::Dataset&, int, bool, int);

}  // namespace resmix::train
