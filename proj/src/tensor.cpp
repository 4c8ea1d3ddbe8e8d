#include "gcpress/tensor.hpp"

#include <cmath>
#include <sstream>

namespace gcpress {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ConfigError("negative extent in shape " + shape_to_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

template <class T>
BasicTensor<T> BasicTensor<T>::full(const Shape& shape, T value) {
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->data.assign(shape_numel(shape), value);
  return BasicTensor(std::move(node));
}

template <class T>
BasicTensor<T> BasicTensor<T>::from(const Shape& shape, std::vector<T> values) {
  if (shape_numel(shape) != values.size())
    throw ConfigError("tensor: shape " + shape_to_string(shape) + " does not match " +
                      std::to_string(values.size()) + " values");
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->data = std::move(values);
  return BasicTensor(std::move(node));
}

template <class T>
int BasicTensor<T>::dim(int i) const {
  const int r = rank();
  if (i < 0) i += r;
  if (i < 0 || i >= r) throw UsageError("tensor: dimension index out of range");
  return node_->shape[static_cast<std::size_t>(i)];
}

template <class T>
T BasicTensor<T>::item() const {
  if (numel() != 1) throw UsageError("tensor: item() on non-scalar " + shape_to_string(shape()));
  return node_->data[0];
}

template <class T>
std::size_t BasicTensor<T>::flat_index(std::initializer_list<int> index) const {
  if (index.size() != node_->shape.size()) throw UsageError("tensor: index rank mismatch");
  std::size_t flat = 0;
  std::size_t d = 0;
  for (int i : index) {
    const int extent = node_->shape[d++];
    if (i < 0 || i >= extent) throw UsageError("tensor: index out of range");
    flat = flat * static_cast<std::size_t>(extent) + static_cast<std::size_t>(i);
  }
  return flat;
}

template <class T>
T& BasicTensor<T>::at(std::initializer_list<int> index) {
  return node_->data[flat_index(index)];
}

template <class T>
T BasicTensor<T>::at(std::initializer_list<int> index) const {
  return node_->data[flat_index(index)];
}

template <class T>
BasicTensor<T> BasicTensor<T>::detach() const {
  return from(shape(), node_->data);
}

template <class T>
BasicTensor<T> BasicTensor<T>::reshape(const Shape& shape) const {
  if (shape_numel(shape) != numel()) throw ConfigError("tensor: reshape changes element count");
  return from(shape, node_->data);
}

template <class T>
void check_finite(std::span<const T> values, const std::string& what) {
  for (const T v : values)
    if (!std::isfinite(v)) throw NumericalError("non-finite value produced by " + what);
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template void check_finite<float>(std::span<const float>, const std::string&);
template void check_finite<double>(std::span<const double>, const std::string&);

}  // namespace gcpress
