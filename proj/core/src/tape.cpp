#include "resmix/tape.hpp"

#include "resmix/error.hpp"
#include "resmix/rng.hpp"

namespace resmix {

template <typename T>
typename Tape<T>::Node& Tape<T>::node(Var v) {
  if (v.id >= nodes_.size()) throw Error("variable does not belong to this tape");
  return nodes_[v.id];
}

template <typename T>
const typename Tape<T>::Node& Tape<T>::node(Var v) const {
  if (v.id >= nodes_.size()) throw Error("variable does not belong to this tape");
  return nodes_[v.id];
}

template <typename T>
Var Tape<T>::constant(Tensor<T> value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::parameter(Parameter<T>& p) {
  Node n;
  n.value = p.value;
  n.needs_grad = true;
  n.param = &p;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, const std::vector<Var>& inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (Var in : inputs) n.needs_grad = n.needs_grad || node(in).needs_grad;
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
  return node(v).value;
}

template <typename T>
bool Tape<T>::requires_grad(Var v) const {
  return node(v).needs_grad;
}

template <typename T>
Tensor<T>* Tape<T>::grad_of(Var v) {
  Node& n = node(v);
  if (!n.needs_grad) return nullptr;
  if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape());
  return &n.grad;
}

template <typename T>
void Tape<T>::backward(Var loss) {
  Node& root = node(loss);
  if (root.value.size() != 1) {
    throw ShapeError("backward needs a single-element loss, got shape " +
                     shape_str(root.value.shape()));
  }
  if (root.needs_grad) {
    root.grad = Tensor<T>(root.value.shape(), T{1});
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.empty()) continue;
      if (n.backward) n.backward(n.value, n.grad, *this);
      if (n.param) n.param->grad += n.grad;
      // Release intermediate storage as soon as it has been propagated.
      n.grad = Tensor<T>();
      n.value = Tensor<T>();
      n.backward = nullptr;
    }
  }
  clear();
}

template <typename T>
void Tape<T>::clear() {
  nodes_.clear();
  kinks_ = 0;
}

template <typename T>
void Tape<T>::note_kinks(std::uint64_t h) {
  kinks_ = hash_combine(kinks_, h);
}

template class Tape<float>;
template class Tape<double>;

}  // namespace resmix
