#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gcpress/errors.hpp"

namespace gcpress {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {

template <class T>
struct TensorNode {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  bool is_leaf = true;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
};

}  // namespace detail

/// Dense row-major N-d array with shared ownership. Copies alias the same
/// buffer; use clone() for a deep copy. The scalar type is float for
/// training/inference and double for gradient checking.
template <class T>
class BasicTensor {
 public:
  using value_type = T;
  using Node = detail::TensorNode<T>;

  BasicTensor() = default;
  explicit BasicTensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static BasicTensor zeros(const Shape& shape) { return full(shape, T(0)); }
  static BasicTensor full(const Shape& shape, T value);
  static BasicTensor from(const Shape& shape, std::vector<T> values);
  static BasicTensor scalar(T value) { return from({1}, {value}); }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const;
  int rank() const { return static_cast<int>(node_->shape.size()); }
  std::size_t numel() const { return node_->data.size(); }

  std::span<T> data() { return node_->data; }
  std::span<const T> data() const { return node_->data; }
  std::vector<T>& values() { return node_->data; }
  const std::vector<T>& values() const { return node_->data; }

  bool has_grad() const { return node_->grad.size() == node_->data.size() && !node_->data.empty(); }
  std::span<T> grad() { return node_->grad; }
  std::span<const T> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  BasicTensor& set_requires_grad(bool on = true) {
    node_->requires_grad = on;
    return *this;
  }

  T item() const;
  T& at(std::initializer_list<int> index);
  T at(std::initializer_list<int> index) const;

  /// Same values, no gradient tracking, no link to any record.
  BasicTensor detach() const;
  BasicTensor clone() const { return detach(); }
  BasicTensor reshape(const Shape& shape) const;

  template <class U>
  BasicTensor<U> cast() const {
    std::vector<U> out(numel());
    for (std::size_t i = 0; i < numel(); ++i) out[i] = static_cast<U>(node_->data[i]);
    return BasicTensor<U>::from(shape(), std::move(out));
  }

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

 private:
  std::size_t flat_index(std::initializer_list<int> index) const;
  std::shared_ptr<Node> node_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

/// Throws NumericalError naming `what` if any value is NaN or infinite.
template <class T>
void check_finite(std::span<const T> values, const std::string& what);

}  // namespace gcpress
