#pragma once

#include "resmix/parameter.hpp"

namespace resmix {

struct OptimizerConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  // Apply decay to every parameter instead of only those flagged.
  bool decay_all = false;

  void validate() const;
};

// SGD with heavy-ball momentum and coupled L2 decay:
//   g   = grad + weight_decay * value   (decay-flagged parameters)
//   buf = momentum * buf + g
//   value -= learning_rate * buf
// Gradients are zeroed afterwards.
template <typename T>
void sgd_step(ParameterSet<T>& params, const OptimizerConfig& cfg);

}  // namespace resmix
