#include "resmix/parameter.hpp"

#include "resmix/error.hpp"

namespace resmix {

template <typename T>
void ParameterSet<T>::claim(const std::string& name) {
  if (!names_.emplace(name, 0).second) throw Error("duplicate parameter name: " + name);
}

template <typename T>
Parameter<T>& ParameterSet<T>::add(std::string name, Tensor<T> value, bool decay) {
  claim(name);
  Parameter<T> p;
  p.name = std::move(name);
  p.grad = Tensor<T>(value.shape());
  p.momentum = Tensor<T>(value.shape());
  p.value = std::move(value);
  p.decay = decay;
  params_.push_back(std::move(p));
  return params_.back();
}

template <typename T>
Buffer<T>& ParameterSet<T>::add_buffer(std::string name, Tensor<T> value) {
  claim(name);
  buffers_.push_back(Buffer<T>{std::move(name), std::move(value)});
  return buffers_.back();
}

template <typename T>
Parameter<T>* ParameterSet<T>::find(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

template <typename T>
Buffer<T>* ParameterSet<T>::find_buffer(const std::string& name) {
  for (auto& b : buffers_)
    if (b.name == name) return &b;
  return nullptr;
}

template <typename T>
std::size_t ParameterSet<T>::count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template <typename T>
void ParameterSet<T>::copy_state_from(const ParameterSet& other) {
  if (other.params_.size() != params_.size() || other.buffers_.size() != buffers_.size()) {
    throw Error("parameter sets differ in layout");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& src = other.params_[i];
    auto& dst = params_[i];
    if (src.name != dst.name || src.value.shape() != dst.value.shape()) {
      throw Error("parameter mismatch: " + src.name + " vs " + dst.name);
    }
    dst.value = src.value;
    dst.momentum = src.momentum;
  }
  for (std::size_t i = 0; i < buffers_.size(); ++i) {
    if (other.buffers_[i].name != buffers_[i].name) {
      throw Error("buffer mismatch: " + other.buffers_[i].name + " vs " + buffers_[i].name);
    }
    buffers_[i].value = other.buffers_[i].value;
  }
}

template class ParameterSet<float>;
template class ParameterSet<double>;

}  // namespace resmix
