#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "resmix/ops.hpp"
#include "resmix/parameter.hpp"
#include "resmix/rng.hpp"
#include "resmix/tape.hpp"

namespace resmix::nn {

struct BasicBlockCfg {
  int in_channels = 16;
  int out_channels = 16;
  int stride = 1;

  bool projection() const { return stride != 1 || in_channels != out_channels; }
};

struct GaterCfg {
  int in_channels = 16;
  std::array<int, 4> conv_channels{32, 32, 32, 16};
  std::array<int, 4> conv_strides{2, 2, 1, 1};
  int num_experts = 2;
};

struct MixtureModuleCfg {
  int num_experts = 2;
  int depth = 1;
  int in_channels = 16;
  int out_channels = 16;
  int stride = 1;  // first block of every expert stack
  GaterCfg gater;
};

struct ResMixCfg {
  int experts = 2;
  int depth = 2;
  int input_channels = 3;
  int stem_channels = 16;
  std::array<int, 3> stage_channels{16, 32, 64};
  int num_classes = 2;
  GaterCfg gater;  // in_channels and num_experts are filled per module
};

// CIFAR-style BasicBlock ResNet with 6n + 2 weighted layers.
struct ResNetCfg {
  int blocks_per_stage = 4;
  int input_channels = 3;
  std::array<int, 3> stage_channels{16, 32, 64};
  int stem_stride = 2;
  int num_classes = 2;

  int depth() const { return 6 * blocks_per_stage + 2; }
};

enum class Arch { ResMixNet, ResNet };

// Std of the classifier weights; keeps initial logits near zero.
inline constexpr double kHeadInitStd = 0.01;

// Serializable model selection shared by the trainer, checkpoints and CLI.
struct ModelConfig {
  Arch arch = Arch::ResMixNet;
  int experts = 2;
  int depth = 2;
  int blocks_per_stage = 4;

  static ModelConfig resmixnet(int experts, int depth);
  static ModelConfig resnet(int blocks_per_stage);
  // "resnet26", "resnet50" or any resnet<6n+2>.
  static ModelConfig resnet_by_depth(int depth);

  void validate() const;
  std::string label() const;  // "ResMixNet(2,2)", "ResNet26"
  ResMixCfg resmix_cfg() const;
  ResNetCfg resnet_cfg() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Creates parameters with fan-in scaled normal init, drawing from one stream in
// creation order.
template <typename T>
class LayerFactory {
 public:
  LayerFactory(ParameterSet<T>& params, Rng& rng) : params_(params), rng_(rng) {}

  Parameter<T>& weight(const std::string& name, Shape shape, std::int64_t fan_in);
  Parameter<T>& normal(const std::string& name, Shape shape, double std);
  Parameter<T>& zeros(const std::string& name, Shape shape, bool decay);
  Parameter<T>& ones(const std::string& name, Shape shape, bool decay);
  Buffer<T>& buffer(const std::string& name, Shape shape, T fill);

 private:
  ParameterSet<T>& params_;
  Rng& rng_;
};

template <typename T>
struct Conv {
  Parameter<T>* weight = nullptr;
  Parameter<T>* bias = nullptr;
  int stride = 1;
  int pad = 0;

  static Conv make(LayerFactory<T>& f, const std::string& name, int cin, int cout, int kernel,
                   int stride, int pad, bool with_bias = false);
  Var forward(Tape<T>& tape, Var x) const;
};

template <typename T>
struct BatchNorm {
  Parameter<T>* gamma = nullptr;
  Parameter<T>* beta = nullptr;
  Buffer<T>* running_mean = nullptr;
  Buffer<T>* running_var = nullptr;
  BatchNormOptions opts;

  static BatchNorm make(LayerFactory<T>& f, const std::string& name, int channels);
  Var forward(Tape<T>& tape, Var x, Mode mode) const;
};

template <typename T>
struct Linear {
  Parameter<T>* weight = nullptr;
  Parameter<T>* bias = nullptr;

  // init_std > 0 replaces the fan-in scaled std.
  static Linear make(LayerFactory<T>& f, const std::string& name, int in, int out, double init_std = 0);
  Var forward(Tape<T>& tape, Var x) const;
};

// relu(bn2(conv2(relu(bn1(conv1(x))))) + shortcut(x)); conv1 carries the stride.
template <typename T>
class BasicBlock {
 public:
  BasicBlock(LayerFactory<T>& f, const std::string& name, const BasicBlockCfg& cfg);
  Var forward(Tape<T>& tape, Var x, Mode mode) const;
  const BasicBlockCfg& cfg() const { return cfg_; }

 private:
  BasicBlockCfg cfg_;
  Conv<T> conv1_, conv2_, proj_;
  BatchNorm<T> bn1_, bn2_, proj_bn_;
};

// D-stack of BasicBlocks; only the first block strides or changes width.
template <typename T>
class BlockStack {
 public:
  BlockStack(LayerFactory<T>& f, const std::string& name, int depth, int in_channels,
             int out_channels, int stride);
  Var forward(Tape<T>& tape, Var x, Mode mode) const;
  std::size_t size() const { return blocks_.size(); }

 private:
  std::vector<BasicBlock<T>> blocks_;
};

// Four conv-BN-ReLU layers, global average pooling, dense(E) and softmax.
template <typename T>
class Gater {
 public:
  Gater(LayerFactory<T>& f, const std::string& name, const GaterCfg& cfg);
  Var forward(Tape<T>& tape, Var x, Mode mode) const;  // N x E gate probabilities
  const GaterCfg& cfg() const { return cfg_; }

 private:
  GaterCfg cfg_;
  std::array<Conv<T>, 4> convs_;
  std::array<BatchNorm<T>, 4> bns_;
  Linear<T> head_;
};

// E independent expert stacks fed the same input, mixed by the gater's
// per-sample probabilities.
template <typename T>
class MixtureModule {
 public:
  MixtureModule(LayerFactory<T>& f, const std::string& name, const MixtureModuleCfg& cfg);

  // gates_out, when given, receives the gate variable.
  Var forward(Tape<T>& tape, Var x, Mode mode, Var* gates_out = nullptr) const;
  Var forward_expert(Tape<T>& tape, std::size_t expert, Var x, Mode mode) const;
  const MixtureModuleCfg& cfg() const { return cfg_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  MixtureModuleCfg cfg_;
  std::vector<BlockStack<T>> experts_;
  Gater<T> gater_;
};

// Gate variables recorded during one forward pass, one per mixture module.
struct ForwardTrace {
  std::vector<std::string> modules;
  std::vector<Var> gates;
};

// ResMixNet: stem -> M1 -> M2 -> plain stack -> GAP -> dense(2).
// ResNet:    stem -> stack -> stack -> stack -> GAP -> dense(2).
template <typename T>
class Network {
 public:
  using Stage = std::variant<MixtureModule<T>, BlockStack<T>>;

  static std::unique_ptr<Network> build(const ModelConfig& cfg, std::uint64_t init_seed);

  Var forward(Tape<T>& tape, Var x, Mode mode, ForwardTrace* trace = nullptr) const;

  ParameterSet<T>& params() { return *params_; }
  const ParameterSet<T>& params() const { return *params_; }
  const ModelConfig& config() const { return config_; }
  std::size_t num_stages() const { return stages_.size(); }
  const Stage& stage(std::size_t i) const { return stages_.at(i); }
  std::size_t num_mixtures() const;

  // Runs the stem only; exposed so tests can rebuild forwards by hand.
  Var forward_stem(Tape<T>& tape, Var x, Mode mode) const;
  Var forward_head(Tape<T>& tape, Var features) const;

 private:
  explicit Network(const ModelConfig& cfg);

  ModelConfig config_;
  std::unique_ptr<ParameterSet<T>> params_;
  Conv<T> stem_conv_;
  BatchNorm<T> stem_bn_;
  std::vector<Stage> stages_;
  Linear<T> head_;
};

struct ParamCount {
  std::size_t total = 0;
  // Keyed by top-level module ("stem", "m1", ...) and by second-level module
  // ("m1.expert0", "m1.gater", ...).
  std::map<std::string, std::size_t> by_module;
  std::map<std::string, std::size_t> by_submodule;
  bool exceeds_budget = false;  // ResMixNet larger than ResNet26
  std::size_t budget = 0;
};

std::size_t resnet26_param_count();

template <typename T>
ParamCount count_params(const Network<T>& net);

ParamCount count_params(const ModelConfig& cfg);

// Module tree with parameter shapes and counts.
template <typename T>
nlohmann::json model_summary(const Network<T>& net);

extern template class Network<float>;
extern template class Network<double>;

}  // namespace resmix::nn
