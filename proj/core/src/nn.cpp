#include "resmix/nn.hpp"

#include <cmath>

#include "resmix/error.hpp"

namespace resmix::nn {

ModelConfig ModelConfig::resmixnet(int experts, int depth) {
  ModelConfig c;
  c.arch = Arch::ResMixNet;
  c.experts = experts;
  c.depth = depth;
  return c;
}

ModelConfig ModelConfig::resnet(int blocks_per_stage) {
  ModelConfig c;
  c.arch = Arch::ResNet;
  c.blocks_per_stage = blocks_per_stage;
  return c;
}

ModelConfig ModelConfig::resnet_by_depth(int depth) {
  if (depth < 8 || (depth - 2) % 6 != 0) {
    throw ValidationError("ResNet depth must be 6n + 2 with n >= 1, got " + std::to_string(depth));
  }
  return resnet((depth - 2) / 6);
}

void ModelConfig::validate() const {
  if (arch == Arch::ResMixNet) {
    if (experts < 1 || depth < 1) {
      throw ValidationError("ResMixNet needs experts >= 1 and depth >= 1, got (" +
                            std::to_string(experts) + "," + std::to_string(depth) + ")");
    }
  } else if (blocks_per_stage < 1) {
    throw ValidationError("ResNet needs blocks_per_stage >= 1");
  }
}

std::string ModelConfig::label() const {
  if (arch == Arch::ResMixNet) {
    return "ResMixNet(" + std::to_string(experts) + "," + std::to_string(depth) + ")";
  }
  return "ResNet" + std::to_string(resnet_cfg().depth());
}

ResMixCfg ModelConfig::resmix_cfg() const {
  ResMixCfg c;
  c.experts = experts;
  c.depth = depth;
  return c;
}

ResNetCfg ModelConfig::resnet_cfg() const {
  ResNetCfg c;
  c.blocks_per_stage = blocks_per_stage;
  return c;
}

nlohmann::json ModelConfig::to_json() const {
  if (arch == Arch::ResMixNet) {
    return {{"arch", "resmixnet"}, {"experts", experts}, {"depth", depth}};
  }
  return {{"arch", "resnet"}, {"blocks_per_stage", blocks_per_stage}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  for (const auto& [key, value] : j.items()) {
    if (key != "arch" && key != "experts" && key != "depth" && key != "blocks_per_stage") {
      throw ValidationError("unknown model key '" + key + "'");
    }
  }
  const std::string arch = j.at("arch").get<std::string>();
  ModelConfig c;
  if (arch == "resmixnet") {
    c = resmixnet(j.at("experts").get<int>(), j.at("depth").get<int>());
  } else if (arch == "resnet") {
    c = resnet(j.at("blocks_per_stage").get<int>());
  } else {
    throw ValidationError("unknown model arch '" + arch + "'");
  }
  c.validate();
  return c;
}

// --- layers -----------------------------------------------------------------

template <typename T>
Parameter<T>& LayerFactory<T>::weight(const std::string& name, Shape shape, std::int64_t fan_in) {
  return normal(name, std::move(shape), std::sqrt(2.0 / static_cast<double>(fan_in)));
}

template <typename T>
Parameter<T>& LayerFactory<T>::normal(const std::string& name, Shape shape, double std) {
  Tensor<T> v(std::move(shape));
  for (auto& x : v.data()) x = static_cast<T>(std * rng_.normal());
  return params_.add(name, std::move(v), true);
}

template <typename T>
Parameter<T>& LayerFactory<T>::zeros(const std::string& name, Shape shape, bool decay) {
  return params_.add(name, Tensor<T>(std::move(shape)), decay);
}

template <typename T>
Parameter<T>& LayerFactory<T>::ones(const std::string& name, Shape shape, bool decay) {
  return params_.add(name, Tensor<T>(std::move(shape), T{1}), decay);
}

template <typename T>
Buffer<T>& LayerFactory<T>::buffer(const std::string& name, Shape shape, T fill) {
  return params_.add_buffer(name, Tensor<T>(std::move(shape), fill));
}

template <typename T>
Conv<T> Conv<T>::make(LayerFactory<T>& f, const std::string& name, int cin, int cout, int kernel,
                      int stride, int pad, bool with_bias) {
  Conv c;
  c.weight = &f.weight(name + ".weight", {cout, cin, kernel, kernel},
                       static_cast<std::int64_t>(cin) * kernel * kernel);
  if (with_bias) c.bias = &f.zeros(name + ".bias", {cout}, false);
  c.stride = stride;
  c.pad = pad;
  return c;
}

template <typename T>
Var Conv<T>::forward(Tape<T>& tape, Var x) const {
  std::optional<Var> b;
  if (bias) b = tape.parameter(*bias);
  return conv2d(tape, x, tape.parameter(*weight), b, stride, pad);
}

template <typename T>
BatchNorm<T> BatchNorm<T>::make(LayerFactory<T>& f, const std::string& name, int channels) {
  BatchNorm bn;
  bn.gamma = &f.ones(name + ".gamma", {channels}, false);
  bn.beta = &f.zeros(name + ".beta", {channels}, false);
  bn.running_mean = &f.buffer(name + ".running_mean", {channels}, T{0});
  bn.running_var = &f.buffer(name + ".running_var", {channels}, T{1});
  return bn;
}

template <typename T>
Var BatchNorm<T>::forward(Tape<T>& tape, Var x, Mode mode) const {
  return batchnorm2d(tape, x, tape.parameter(*gamma), tape.parameter(*beta), running_mean->value,
                     running_var->value, mode, opts);
}

template <typename T>
Linear<T> Linear<T>::make(LayerFactory<T>& f, const std::string& name, int in, int out, double init_std) {
  Linear l;
  l.weight = init_std > 0 ? &f.normal(name + ".weight", {out, in}, init_std) : &f.weight(name + ".weight", {out, in}, in);
  l.bias = &f.zeros(name + ".bias", {out}, false);
  return l;
}

template <typename T>
Var Linear<T>::forward(Tape<T>& tape, Var x) const {
  return dense(tape, x, tape.parameter(*weight), tape.parameter(*bias));
}

// --- blocks -----------------------------------------------------------------

template <typename T>
BasicBlock<T>::BasicBlock(LayerFactory<T>& f, const std::string& name, const BasicBlockCfg& cfg)
    : cfg_(cfg) {
  if (cfg.in_channels < 1 || cfg.out_channels < 1 || (cfg.stride != 1 && cfg.stride != 2)) {
    throw ValidationError("invalid BasicBlock configuration for " + name);
  }
  conv1_ = Conv<T>::make(f, name + ".conv1", cfg.in_channels, cfg.out_channels, 3, cfg.stride, 1);
  bn1_ = BatchNorm<T>::make(f, name + ".bn1", cfg.out_channels);
  conv2_ = Conv<T>::make(f, name + ".conv2", cfg.out_channels, cfg.out_channels, 3, 1, 1);
  bn2_ = BatchNorm<T>::make(f, name + ".bn2", cfg.out_channels);
  if (cfg.projection()) {
    proj_ = Conv<T>::make(f, name + ".shortcut.conv", cfg.in_channels, cfg.out_channels, 1,
                          cfg.stride, 0);
    proj_bn_ = BatchNorm<T>::make(f, name + ".shortcut.bn", cfg.out_channels);
  }
}

template <typename T>
Var BasicBlock<T>::forward(Tape<T>& tape, Var x, Mode mode) const {
  Var h = relu(tape, bn1_.forward(tape, conv1_.forward(tape, x), mode));
  h = bn2_.forward(tape, conv2_.forward(tape, h), mode);
  Var shortcut = cfg_.projection() ? proj_bn_.forward(tape, proj_.forward(tape, x), mode) : x;
  return relu(tape, add(tape, h, shortcut));
}

template <typename T>
BlockStack<T>::BlockStack(LayerFactory<T>& f, const std::string& name, int depth, int in_channels,
                          int out_channels, int stride) {
  if (depth < 1) throw ValidationError("block stack " + name + " needs depth >= 1");
  blocks_.reserve(static_cast<std::size_t>(depth));
  for (int i = 0; i < depth; ++i) {
    BasicBlockCfg cfg{i == 0 ? in_channels : out_channels, out_channels, i == 0 ? stride : 1};
    blocks_.emplace_back(f, name + ".block" + std::to_string(i), cfg);
  }
}

template <typename T>
Var BlockStack<T>::forward(Tape<T>& tape, Var x, Mode mode) const {
  for (const auto& b : blocks_) x = b.forward(tape, x, mode);
  return x;
}

template <typename T>
Gater<T>::Gater(LayerFactory<T>& f, const std::string& name, const GaterCfg& cfg) : cfg_(cfg) {
  if (cfg.num_experts < 1) throw ValidationError("gater needs at least one expert");
  int in = cfg.in_channels;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string layer = name + ".conv" + std::to_string(i);
    convs_[i] = Conv<T>::make(f, layer, in, cfg.conv_channels[i], 3, cfg.conv_strides[i], 1);
    bns_[i] = BatchNorm<T>::make(f, name + ".bn" + std::to_string(i), cfg.conv_channels[i]);
    in = cfg.conv_channels[i];
  }
  head_ = Linear<T>::make(f, name + ".dense", in, cfg.num_experts);
}

template <typename T>
Var Gater<T>::forward(Tape<T>& tape, Var x, Mode mode) const {
  for (std::size_t i = 0; i < 4; ++i) x = relu(tape, bns_[i].forward(tape, convs_[i].forward(tape, x), mode));
  return softmax(tape, head_.forward(tape, global_avg_pool(tape, x)));
}

namespace {

template <typename T>
std::vector<BlockStack<T>> make_experts(LayerFactory<T>& f, const std::string& name,
                                        const MixtureModuleCfg& cfg) {
  if (cfg.num_experts < 1) throw ValidationError("mixture module " + name + " needs E >= 1");
  std::vector<BlockStack<T>> experts;
  experts.reserve(static_cast<std::size_t>(cfg.num_experts));
  for (int e = 0; e < cfg.num_experts; ++e) {
    experts.emplace_back(f, name + ".expert" + std::to_string(e), cfg.depth, cfg.in_channels,
                         cfg.out_channels, cfg.stride);
  }
  return experts;
}

GaterCfg module_gater(const MixtureModuleCfg& cfg) {
  GaterCfg g = cfg.gater;
  g.in_channels = cfg.in_channels;
  g.num_experts = cfg.num_experts;
  return g;
}

}  // namespace

template <typename T>
MixtureModule<T>::MixtureModule(LayerFactory<T>& f, const std::string& name,
                                const MixtureModuleCfg& cfg)
    : name_(name),
      cfg_(cfg),
      experts_(make_experts(f, name, cfg)),
      gater_(f, name + ".gater", module_gater(cfg)) {}

template <typename T>
Var MixtureModule<T>::forward(Tape<T>& tape, Var x, Mode mode, Var* gates_out) const {
  std::vector<Var> outs;
  outs.reserve(experts_.size());
  for (const auto& e : experts_) outs.push_back(e.forward(tape, x, mode));
  Var gates = gater_.forward(tape, x, mode);
  if (gates_out) *gates_out = gates;
  return weighted_mixture(tape, std::span<const Var>(outs), gates);
}

template <typename T>
Var MixtureModule<T>::forward_expert(Tape<T>& tape, std::size_t expert, Var x, Mode mode) const {
  return experts_.at(expert).forward(tape, x, mode);
}

// --- networks ---------------------------------------------------------------

template <typename T>
Network<T>::Network(const ModelConfig& cfg)
    : config_(cfg), params_(std::make_unique<ParameterSet<T>>()) {}

template <typename T>
std::unique_ptr<Network<T>> Network<T>::build(const ModelConfig& cfg, std::uint64_t init_seed) {
  cfg.validate();
  std::unique_ptr<Network> net(new Network(cfg));
  Rng rng = Rng::stream(init_seed, "init");
  LayerFactory<T> f(*net->params_, rng);

  if (cfg.arch == Arch::ResMixNet) {
    const ResMixCfg rc = cfg.resmix_cfg();
    net->stem_conv_ = Conv<T>::make(f, "stem.conv", rc.input_channels, rc.stem_channels, 3, 2, 1);
    net->stem_bn_ = BatchNorm<T>::make(f, "stem.bn", rc.stem_channels);
    int in = rc.stem_channels;
    for (int m = 0; m < 2; ++m) {
      MixtureModuleCfg mc;
      mc.num_experts = rc.experts;
      mc.depth = rc.depth;
      mc.in_channels = in;
      mc.out_channels = rc.stage_channels[static_cast<std::size_t>(m)];
      mc.stride = m == 0 ? 1 : 2;
      mc.gater = rc.gater;
      net->stages_.emplace_back(std::in_place_type<MixtureModule<T>>, f,
                                "m" + std::to_string(m + 1), mc);
      in = mc.out_channels;
    }
    net->stages_.emplace_back(std::in_place_type<BlockStack<T>>, f, "stage3", rc.depth, in,
                              rc.stage_channels[2], 2);
    net->head_ = Linear<T>::make(f, "head", rc.stage_channels[2], rc.num_classes, kHeadInitStd);
  } else {
    const ResNetCfg rc = cfg.resnet_cfg();
    net->stem_conv_ =
        Conv<T>::make(f, "stem.conv", rc.input_channels, rc.stage_channels[0], 3, rc.stem_stride, 1);
    net->stem_bn_ = BatchNorm<T>::make(f, "stem.bn", rc.stage_channels[0]);
    int in = rc.stage_channels[0];
    for (std::size_t s = 0; s < 3; ++s) {
      net->stages_.emplace_back(std::in_place_type<BlockStack<T>>, f,
                                "stage" + std::to_string(s + 1), rc.blocks_per_stage, in,
                                rc.stage_channels[s], s == 0 ? 1 : 2);
      in = rc.stage_channels[s];
    }
    net->head_ = Linear<T>::make(f, "head", in, rc.num_classes, kHeadInitStd);
  }
  return net;
}

template <typename T>
std::size_t Network<T>::num_mixtures() const {
  std::size_t n = 0;
  for (const auto& s : stages_) n += std::holds_alternative<MixtureModule<T>>(s) ? 1 : 0;
  return n;
}

template <typename T>
Var Network<T>::forward_stem(Tape<T>& tape, Var x, Mode mode) const {
  return relu(tape, stem_bn_.forward(tape, stem_conv_.forward(tape, x), mode));
}

template <typename T>
Var Network<T>::forward_head(Tape<T>& tape, Var features) const {
  return head_.forward(tape, global_avg_pool(tape, features));
}

template <typename T>
Var Network<T>::forward(Tape<T>& tape, Var x, Mode mode, ForwardTrace* trace) const {
  const Shape& s = tape.value(x).shape();
  if (s.size() != 4 || s[1] != 3) {
    throw ShapeError("network input must be N x 3 x H x W, got " + shape_str(s));
  }
  Var h = forward_stem(tape, x, mode);
  for (const auto& stage : stages_) {
    if (const auto* m = std::get_if<MixtureModule<T>>(&stage)) {
      Var gates;
      h = m->forward(tape, h, mode, &gates);
      if (trace) {
        trace->modules.push_back(m->name());
        trace->gates.push_back(gates);
      }
    } else {
      h = std::get<BlockStack<T>>(stage).forward(tape, h, mode);
    }
  }
  return forward_head(tape, h);
}

// --- counting ---------------------------------------------------------------

namespace {

std::string prefix(const std::string& name, int parts) {
  std::size_t pos = std::string::npos;
  for (int i = 0; i < parts; ++i) {
    pos = name.find('.', pos == std::string::npos ? 0 : pos + 1);
    if (pos == std::string::npos) return name;
  }
  return name.substr(0, pos);
}

}  // namespace

std::size_t resnet26_param_count() {
  static const std::size_t count = Network<float>::build(ModelConfig::resnet(4), 0)->params().count();
  return count;
}

template <typename T>
ParamCount count_params(const Network<T>& net) {
  ParamCount pc;
  for (const auto& p : net.params().params()) {
    pc.total += p.value.size();
    pc.by_module[prefix(p.name, 1)] += p.value.size();
    pc.by_submodule[prefix(p.name, 2)] += p.value.size();
  }
  if (net.config().arch == Arch::ResMixNet) {
    pc.budget = resnet26_param_count();
    pc.exceeds_budget = pc.total > pc.budget;
  }
  return pc;
}

ParamCount count_params(const ModelConfig& cfg) {
  return count_params(*Network<float>::build(cfg, 0));
}

template <typename T>
nlohmann::json model_summary(const Network<T>& net) {
  nlohmann::json root = {{"name", net.config().label()}, {"params", 0}, {"children", nlohmann::json::array()}};
  for (const auto& p : net.params().params()) {
    nlohmann::json* node = &root;
    std::size_t start = 0;
    while (true) {
      (*node)["params"] = (*node)["params"].template get<std::size_t>() + p.value.size();
      const std::size_t dot = p.name.find('.', start);
      const std::string part = p.name.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      auto& children = (*node)["children"];
      nlohmann::json* next = nullptr;
      for (auto& c : children)
        if (c["name"] == part) next = &c;
      if (!next) {
        children.push_back({{"name", part}, {"params", 0}, {"children", nlohmann::json::array()}});
        next = &children.back();
      }
      node = next;
      if (dot == std::string::npos) {
        (*node)["params"] = p.value.size();
        (*node)["shape"] = p.value.shape();
        node->erase("children");
        break;
      }
      start = dot + 1;
    }
  }
  root["model"] = net.config().to_json();
  return root;
}

template class LayerFactory<float>;
template class LayerFactory<double>;
template struct Conv<float>;
template struct Conv<double>;
template struct BatchNorm<float>;
template struct BatchNorm<double>;
template struct Linear<float>;
template struct Linear<double>;
template class BasicBlock<float>;
template class BasicBlock<double>;
template class BlockStack<float>;
template class BlockStack<double>;
template class Gater<float>;
template class Gater<double>;
template class MixtureModule<float>;
template class MixtureModule<double>;
template class Network<float>;
template class Network<double>;
template ParamCount count_params<float>(const Network<float>&);
template ParamCount count_params<double>(const Network<double>&);
template nlohmann::json model_summary<float>(const Network<float>&);
template nlohmann::json model_summary<double>(const Network<double>&);

}  // namespace resmix::nn
