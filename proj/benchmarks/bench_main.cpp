#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "resmix/datagen.hpp"
#include "resmix/nn.hpp"
#include "resmix/ops.hpp"
#include "resmix/optim.hpp"
#include "resmix/rng.hpp"
#include "resmix/trainer.hpp"

using namespace resmix;

namespace {

template <typename T>
Tensor<T> filled(Shape shape, std::uint64_t seed) {
  Tensor<T> t(std::move(shape));
  Rng rng(seed);
  for (auto& v : t.data()) v = static_cast<T>(rng.normal());
  return t;
}

// Forward and backward of one 3x3 conv at the given channel count on 32 x 32 maps.
void BM_Conv3x3(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const auto x = filled<float>({16, c, 32, 32}, 1);
  const auto w = filled<float>({c, c, 3, 3}, 2);
  for (auto _ : state) {
    Tape<float> tape;
    const Var xv = tape.constant(x);
    const Var wv = tape.constant(w);
    const Var y = conv2d(tape, xv, wv, std::nullopt, 1, 1);
    benchmark::DoNotOptimize(tape.value(y).data().data());
  }
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_Conv3x3)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Conv3x3F64(benchmark::State& state) {
  const auto x = filled<double>({2, 16, 16, 16}, 1);
  const auto w = filled<double>({16, 16, 3, 3}, 2);
  for (auto _ : state) {
    Tape<double> tape;
    const Var y = conv2d(tape, tape.constant(x), tape.constant(w), std::nullopt, 1, 1);
    benchmark::DoNotOptimize(tape.value(y).data().data());
  }
}
BENCHMARK(BM_Conv3x3F64)->Unit(benchmark::kMillisecond);

// One SGD step (forward, backward, update) on a batch of 64 Pentomino images.
void BM_TrainStep(benchmark::State& state) {
  const nn::ModelConfig cfg = state.range(0) == 0 ? nn::ModelConfig::resmixnet(4, 1)
                                                  : nn::ModelConfig::resmixnet(2, 2);
  auto net = nn::Network<float>::build(cfg, 0);
  const data::PentominoGenConfig pcfg;
  const auto ds = data::generate_pentomino(pcfg, data::Split::Train, 64, 4);
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto x = train::batch_tensor<float>(ds, idx);
  const std::vector<int> labels(ds.labels.begin(), ds.labels.end());
  OptimizerConfig opt;
  opt.learning_rate = 0.01;
  for (auto _ : state) {
    Tape<float> tape;
    const Var logits = net->forward(tape, tape.constant(x), Mode::Train);
    tape.backward(log_softmax_nll(tape, logits, std::span<const int>(labels)));
    sgd_step(net->params(), opt);
  }
  state.SetLabel(cfg.label());
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
