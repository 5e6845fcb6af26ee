#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "resmix/tensor.hpp"

namespace resmix {

// Trainable array with its gradient and SGD momentum buffer.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> momentum;
  bool decay = true;  // participates in L2 weight decay

  void zero_grad() { grad.fill(T{0}); }
};

// Non-trainable state persisted with a model (batch-norm running stats).
template <typename T>
struct Buffer {
  std::string name;
  Tensor<T> value;
};

// Owns all parameters and buffers of one model. Element addresses are stable
// for the lifetime of the set, so layers keep raw pointers into it.
template <typename T>
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;

  Parameter<T>& add(std::string name, Tensor<T> value, bool decay);
  Buffer<T>& add_buffer(std::string name, Tensor<T> value);

  std::deque<Parameter<T>>& params() { return params_; }
  const std::deque<Parameter<T>>& params() const { return params_; }
  std::deque<Buffer<T>>& buffers() { return buffers_; }
  const std::deque<Buffer<T>>& buffers() const { return buffers_; }

  Parameter<T>* find(const std::string& name);
  Buffer<T>* find_buffer(const std::string& name);

  std::size_t count() const;  // total trainable scalars
  void zero_grad();

  // Copies values, momentum and buffers from another set with identical names
  // and shapes.
  void copy_state_from(const ParameterSet& other);

 private:
  void claim(const std::string& name);

  std::deque<Parameter<T>> params_;
  std::deque<Buffer<T>> buffers_;
  std::map<std::string, int> names_;
};

extern template class ParameterSet<float>;
extern template class ParameterSet<double>;

}  // namespace resmix
