#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "resmix/parameter.hpp"
#include "resmix/tensor.hpp"

namespace resmix {

// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;
  bool valid() const { return id != npos; }
};

enum class Mode { Train, Eval };

// Reverse-mode recording of one forward pass. Nodes are appended in
// evaluation order; backward() walks them in exact reverse and consumes the
// tape.
template <typename T>
class Tape {
 public:
  // Receives the node's own output and its gradient, and accumulates into the
  // gradients of its inputs through Tape::grad_of.
  using BackwardFn =
      std::function<void(const Tensor<T>& out, const Tensor<T>& out_grad, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor<T> value);
  Var parameter(Parameter<T>& p);
  Var record(Tensor<T> value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor<T> value, const std::vector<Var>& inputs, BackwardFn backward);

  const Tensor<T>& value(Var v) const;
  bool requires_grad(Var v) const;

  // Gradient accumulator of v, allocated (zeroed) on first use. Returns
  // nullptr when v does not require a gradient.
  Tensor<T>* grad_of(Var v);

  // Seeds d(loss)/d(loss) = 1, runs every recorded backward function in reverse
  // order and adds the result into Parameter::grad. Throws ShapeError when the
  // loss is not a single element. The tape is empty afterwards.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  void clear();

  // Non-smooth ops (relu) fold their activation pattern into this signature
  // when tracking is enabled; finite-difference checks compare it across
  // perturbed passes.
  void set_track_kinks(bool on) { track_kinks_ = on; }
  bool track_kinks() const { return track_kinks_; }
  void note_kinks(std::uint64_t h);
  std::uint64_t kink_signature() const { return kinks_; }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool needs_grad = false;
    Parameter<T>* param = nullptr;
    BackwardFn backward;
  };

  Node& node(Var v);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  bool track_kinks_ = false;
  std::uint64_t kinks_ = 0;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace resmix
