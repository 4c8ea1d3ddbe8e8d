#include "gcpress/autograd.hpp"

#include <algorithm>

namespace gcpress {

template <class T>
Tape<T>*& active_tape() {
  thread_local Tape<T>* tape = nullptr;
  return tape;
}

template <class T>
void Tape<T>::append(std::string op, std::shared_ptr<Node> output, BackwardFn fn) {
  entries_.push_back(Entry{std::move(op), std::move(output), std::move(fn)});
}

template <class T>
void Tape<T>::backward(const BasicTensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw UsageError("backward: loss must be a scalar, got " +
                     (loss.defined() ? shape_to_string(loss.shape()) : std::string("undefined")));
  if (!loss.requires_grad()) {
    entries_.clear();
    return;
  }
  Node* root = loss.node();
  root->ensure_grad();
  root->grad[0] += T(1);
  // Ops never outlive the record, so walking in reverse append order is a
  // valid reverse topological order.
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    Node& out = *it->output;
    if (out.grad.size() != out.data.size()) continue;
    check_finite<T>(out.grad, "backward of " + it->op);
    it->backward(out);
  }
  entries_.clear();
}

template <class T>
void backward(const BasicTensor<T>& loss) {
  Tape<T>* tape = active_tape<T>();
  if (tape == nullptr) throw UsageError("backward: no active computation record");
  tape->backward(loss);
}

template <class T>
bool should_record(std::initializer_list<const BasicTensor<T>*> inputs) {
  if (active_tape<T>() == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const BasicTensor<T>* t) { return t != nullptr && t->defined() && t->requires_grad(); });
}

template <class T>
BasicTensor<T> make_result(const std::string& op, Shape shape, std::vector<T> values, bool record,
                           typename Tape<T>::BackwardFn fn) {
  check_finite<T>(values, op);
  auto node = std::make_shared<detail::TensorNode<T>>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  if (shape_numel(node->shape) != node->data.size()) throw ConfigError(op + ": result shape mismatch");
  if (record) {
    node->requires_grad = true;
    node->is_leaf = false;
    active_tape<T>()->append(op, node, std::move(fn));
  }
  return BasicTensor<T>(std::move(node));
}

template <class T>
T* grad_target(const BasicTensor<T>& input) {
  if (!input.defined() || !input.requires_grad()) return nullptr;
  auto* node = input.node();
  node->ensure_grad();
  return node->grad.data();
}

#define GCPRESS_INSTANTIATE(T)                                                                   \
  template class Tape<T>;                                                                        \
  template Tape<T>*& active_tape<T>();                                                           \
  template void backward<T>(const BasicTensor<T>&);                                              \
  template bool should_record<T>(std::initializer_list<const BasicTensor<T>*>);                  \
  template BasicTensor<T> make_result<T>(const std::string&, Shape, std::vector<T>, bool,        \
                                         typename Tape<T>::BackwardFn);                          \
  template T* grad_target<T>(const BasicTensor<T>&);

GCPRESS_INSTANTIATE(float)
GCPRESS_INSTANTIATE(double)
#undef GCPRESS_INSTANTIATE

}  // namespace gcpress
