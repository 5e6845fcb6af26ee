#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "resmix/dataset_file.hpp"
#include "resmix/nn.hpp"
#include "resmix/optim.hpp"

namespace resmix::train {

struct TrainConfig {
  nn::ModelConfig model = nn::ModelConfig::resmixnet(2, 2);
  int batch_size = 64;
  int eval_batch_size = 256;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  bool decay_all = false;
  int epochs = 200;
  std::vector<int> lr_milestones{100, 140};
  double lr_decay_factor = 10.0;
  std::uint64_t seed = 0;
  std::string train_path;
  std::string val_path;
  std::string test_path;  // optional
  // Balanced prefix subsets; 0 keeps the whole split.
  std::uint32_t train_limit = 0;
  std::uint32_t val_limit = 0;
  std::uint32_t test_limit = 0;
  // When false the seconds column is written as 0 so metric files compare
  // bitwise across runs.
  bool log_wall_time = true;
  // Train even when a dataset fails its audit.
  bool skip_audit = false;
  int eval_threads = 1;

  void validate() const;
  OptimizerConfig optimizer(int epoch) const;
  nlohmann::json to_json() const;
  // Rejects unknown keys; missing keys keep their defaults.
  static TrainConfig from_json(const nlohmann::json& j);
};

// Base LR divided by decay_factor^(milestones <= epoch); epochs are 0-based.
double lr_at_epoch(const TrainConfig& cfg, int epoch);

struct EpochMetrics {
  int epoch = 0;
  std::string split;  // train | val | test
  double loss = 0;
  double error = 0;
  double lr = 0;
  double seconds = 0;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const EpochMetrics& m);
std::string metrics_csv(std::span<const EpochMetrics> rows);
std::vector<EpochMetrics> parse_metrics_csv(const std::string& text);

// Images scaled to [0, 1], N x C x H x W.
template <typename T>
Tensor<T> batch_tensor(const data::Dataset& ds, std::span<const std::size_t> indices);

// First count/2 samples of each label in file order (count odd: the extra
// one goes to label 1), preserving file order.
data::Dataset balanced_subset(const data::Dataset& ds, std::uint32_t count);

struct EvalResult {
  double loss = 0;
  double error = 0;
  std::vector<int> predictions;
  std::vector<std::array<double, 2>> probabilities;
  std::vector<std::string> gate_modules;
  // gates[module][sample] = E probabilities
  std::vector<std::vector<std::vector<double>>> gates;

  nlohmann::json to_json() const;
};

// Eval-mode pass in batches; results do not depend on batch size or thread
// count beyond summation rounding of the mean loss.
template <typename T>
EvalResult evaluate(const nn::Network<T>& net, const data::Dataset& ds, int batch_size = 256,
                    bool collect_gates = false, int threads = 1);

struct SplitScore {
  double loss = 0;
  double error = 0;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  double first_batch_loss = 0;
  int best_epoch = -1;
  double best_val_error = 1;
  double best_val_loss = 0;
  std::optional<SplitScore> final_test;
  std::optional<SplitScore> best_test;
  std::unique_ptr<nn::Network<float>> final_model;
  std::unique_ptr<nn::Network<float>> best_model;

  nlohmann::json summary() const;
};

struct TrainOptions {
  // Receives metrics.csv, last.ckpt and best.ckpt when set.
  std::optional<std::filesystem::path> out_dir;
  // Continue from a checkpoint written by an earlier run with the same config.
  std::optional<std::filesystem::path> resume;
  // Stop after this epoch index (exclusive) without finishing; for resume tests.
  std::optional<int> stop_after;
  std::function<void(const EpochMetrics&)> on_epoch;
  // Ends training after the epoch whose train row makes this return true;
  // the run then counts as finished.
  std::function<bool(const EpochMetrics&)> stop_when;
};

// Loads the datasets named in cfg, audits them and trains.
TrainResult train(const TrainConfig& cfg, const TrainOptions& opts = {});

// Trains on datasets already in memory (no audit).
TrainResult train(const TrainConfig& cfg, const data::Dataset& train_set, const data::Dataset& val_set,
                  const data::Dataset* test_set, const TrainOptions& opts = {});

struct SweepCell {
  double learning_rate = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string failure;
  double best_test_error = 0;
  double final_test_error = 0;
  int best_epoch = -1;
};

struct SweepRow {
  double learning_rate = 0;
  std::vector<double> test_errors;  // per successful seed, best-checkpoint
  std::vector<double> final_test_errors;
  double mean = 0;
  double std = 0;  // sample standard deviation; 0 for a single seed
  int failures = 0;
};

struct SweepSummary {
  std::string model;
  std::size_t param_count = 0;
  std::vector<SweepCell> cells;
  std::vector<SweepRow> rows;
  std::optional<double> best_learning_rate;

  nlohmann::json to_json() const;
  // "ResMixNet(4,1) | 191K | 1.20 ± 0.30%"-style line for the best LR.
  std::string table_row() const;
};

double mean_of(std::span<const double> xs);
double sample_std(std::span<const double> xs);

// Groups finished cells by LR and picks the LR with the lowest mean error.
SweepSummary summarize_sweep(const nn::ModelConfig& model, std::vector<SweepCell> cells);

// Runs every (lr, seed) cell with the template config; cell directories go
// under out_dir when given.
SweepSummary sweep(const TrainConfig& base, std::span<const double> lrs, std::span<const std::uint64_t> seeds,
                   const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                   const std::function<void(const SweepCell&)>& on_cell = {});

// Named presets: model, dataset family and learning rate.
struct Preset {
  std::string name;
  nn::ModelConfig model;
  std::string dataset;  // "pentomino" or "mnist-parity"
  double learning_rate = 0;
};

std::span<const Preset> presets();
const Preset& find_preset(const std::string& name);

}  // namespace resmix::train
