#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "resmix/tape.hpp"
#include "resmix/tensor.hpp"

namespace resmix {

// Batch-norm hyperparameters. Running variance is tracked unbiased; the
// normalization itself uses the biased batch variance.
struct BatchNormOptions {
  double eps = 1e-5;
  double momentum = 0.1;
};

// Names of every differentiable op below, in declaration order. The
// gradient-check suite must cover each entry.
std::span<const std::string_view> differentiable_ops();

// Cross-correlation with zero padding. input N x Cin x H x W, weight
// Cout x Cin x kh x kw, optional bias Cout.
template <typename T>
Var conv2d(Tape<T>& tape, Var input, Var weight, std::optional<Var> bias, int stride, int pad);

// Per-channel normalization. In train mode the batch statistics are used and
// the running estimates are updated in place; in eval mode the running
// estimates are used.
template <typename T>
Var batchnorm2d(Tape<T>& tape, Var input, Var gamma, Var beta, Tensor<T>& running_mean,
                Tensor<T>& running_var, Mode mode, const BatchNormOptions& opts = {});

template <typename T>
Var relu(Tape<T>& tape, Var input);

// input N x F, weight O x F, bias O.
template <typename T>
Var dense(Tape<T>& tape, Var input, Var weight, Var bias);

template <typename T>
Var global_avg_pool(Tape<T>& tape, Var input);

// out[n] = sum_i gates[n, i] * experts[i][n]
template <typename T>
Var weighted_mixture(Tape<T>& tape, std::span<const Var> experts, Var gates);

// Row-wise softmax of an N x K tensor.
template <typename T>
Var softmax(Tape<T>& tape, Var logits);

// Mean negative log-likelihood of log_softmax(logits) at the given labels.
template <typename T>
Var log_softmax_nll(Tape<T>& tape, Var logits, std::span<const int> labels);

template <typename T>
Var add(Tape<T>& tape, Var a, Var b);

// Sum of all elements, as a single-element tensor.
template <typename T>
Var sum(Tape<T>& tape, Var input);

// sum(input * weights) for a constant weight tensor of the same shape.
template <typename T>
Var dot_constant(Tape<T>& tape, Var input, const Tensor<T>& weights);

// Convolution output extent along one axis.
std::int64_t conv_out_extent(std::int64_t in, std::int64_t kernel, int stride, int pad);

// Non-differentiable helpers shared with evaluation code.
template <typename T>
std::vector<T> softmax_row(std::span<const T> logits);

}  // namespace resmix
