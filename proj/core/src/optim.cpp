#include "resmix/optim.hpp"

#include "resmix/error.hpp"

namespace resmix {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be >= 0");
}

template <typename T>
void sgd_step(ParameterSet<T>& params, const OptimizerConfig& cfg) {
  const T lr = static_cast<T>(cfg.learning_rate);
  const T mu = static_cast<T>(cfg.momentum);
  const T wd = static_cast<T>(cfg.weight_decay);
  for (auto& p : params.params()) {
    const bool decay = cfg.decay_all || p.decay;
    T* value = p.value.ptr();
    T* grad = p.grad.ptr();
    T* buf = p.momentum.ptr();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      T g = grad[i];
      if (decay) g += wd * value[i];
      buf[i] = mu * buf[i] + g;
      value[i] -= lr * buf[i];
      grad[i] = T{0};
    }
  }
}

template void sgd_step<float>(ParameterSet<float>&, const OptimizerConfig&);
template void sgd_step<double>(ParameterSet<double>&, const OptimizerConfig&);

}  // namespace resmix
