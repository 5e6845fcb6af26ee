#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "resmix/nn.hpp"
#include "resmix/tape.hpp"

namespace resmix::verify {

// |a - n| / max(|a|, |n|, 1e-12)
double relative_error(double analytic, double numeric);

struct GradCheckOptions {
  double step = 1e-4;
  double threshold = 1e-5;
  std::size_t samples_per_tensor = 64;  // 0 checks every scalar
  std::uint64_t seed = 0;
};

struct TensorCheck {
  std::string name;
  std::size_t checked = 0;
  // Scalars whose +-step passes flip a relu, where the loss has a kink and
  // central differences are meaningless.
  std::size_t skipped = 0;
  double max_rel_error = 0;
  std::size_t worst_index = 0;
  double analytic = 0;
  double numeric = 0;
};

struct GradCheckReport {
  std::string target;
  std::string dtype = "f64";
  double step = 0;
  double threshold = 0;
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0;
  std::string failure;  // non-finite gradient location, if any
  bool pass = false;

  nlohmann::json to_json() const;
};

// Records one forward pass reading the current parameter values and returns
// the scalar loss.
using LossFn = std::function<Var(Tape<double>&)>;

// Central differences on every parameter of `params` against the tape's
// backward pass.
GradCheckReport gradcheck(const std::string& target, ParameterSet<double>& params, const LossFn& loss,
                          const GradCheckOptions& opts);

// Fixture for one registered differentiable op; inputs are treated as
// parameters so input gradients are checked too.
GradCheckReport gradcheck_op(const std::string& op, const GradCheckOptions& opts);

// Full network on a random batch x 3 x size x size input with the NLL loss.
GradCheckReport gradcheck_model(const nn::ModelConfig& cfg, int batch, int size, Mode mode,
                                const GradCheckOptions& opts);

struct GradCheckSuite {
  std::vector<GradCheckReport> reports;
  bool pass = false;
  nlohmann::json to_json() const;
};

// Side of the full-model fixture. At 8 x 8 the last stage and the gaters
// batch-normalize 1 x 1 maps over two samples, which leaves the loss too
// curved for step-1e-4 differences.
inline constexpr int kModelCheckSize = 16;

// Every registered op (step 1e-5) and, when full, ResMixNet(2,1) in train
// mode on a 2 x 3 x 16 x 16 batch (step 1e-4); threshold 1e-5 throughout.
GradCheckSuite gradcheck_suite(bool full, std::uint64_t seed = 0);

// Direct-summation convolution, O(N Cout Cin H W kh kw), f64 accumulation.
template <typename T>
Tensor<T> conv_naive(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>* bias, int stride, int pad);

struct ConvDiffReport {
  int trials = 0;
  int exact = 0;
  double max_abs_diff = 0;
  std::vector<std::string> failures;
  bool pass = false;
  nlohmann::json to_json() const;
};

// Randomized f64 shapes with kernel in {1, 3}, stride in {1, 2}, pad in
// {0, 1}; pass requires bitwise equality with conv_naive.
ConvDiffReport conv_differential(int trials, std::uint64_t seed);

struct BudgetCheck {
  std::string model;
  std::size_t count = 0;
  std::size_t budget = 0;  // ResNet26
  bool pass = false;
  nlohmann::json to_json() const;
};

BudgetCheck enforce_budget(const nn::ModelConfig& cfg);

}  // namespace resmix::verify
