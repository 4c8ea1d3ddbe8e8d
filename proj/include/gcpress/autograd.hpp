#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gcpress/tensor.hpp"

namespace gcpress {

/// Ordered record of executed primitive ops. Ops append themselves while a
/// RecordScope is active on the calling thread; backward() replays the record
/// once in reverse and then clears it.
template <class T>
class Tape {
 public:
  using Node = detail::TensorNode<T>;
  using BackwardFn = std::function<void(const Node& out)>;

  struct Entry {
    std::string op;
    std::shared_ptr<Node> output;
    BackwardFn backward;
  };

  void append(std::string op, std::shared_ptr<Node> output, BackwardFn fn);
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  void clear() { entries_.clear(); }

  /// Seeds d(loss)/d(loss) = 1 and propagates into every tracked leaf.
  void backward(const BasicTensor<T>& loss);

 private:
  std::vector<Entry> entries_;
};

template <class T>
Tape<T>*& active_tape();

/// Makes `tape` the active record for the current thread for this scope.
template <class T>
class RecordScope {
 public:
  explicit RecordScope(Tape<T>& tape) : previous_(active_tape<T>()) { active_tape<T>() = &tape; }
  ~RecordScope() { active_tape<T>() = previous_; }
  RecordScope(const RecordScope&) = delete;
  RecordScope& operator=(const RecordScope&) = delete;

 private:
  Tape<T>* previous_;
};

/// Suspends recording (inference, or building targets that must not carry gradients).
template <class T>
class NoRecordScope {
 public:
  NoRecordScope() : previous_(active_tape<T>()) { active_tape<T>() = nullptr; }
  ~NoRecordScope() { active_tape<T>() = previous_; }
  NoRecordScope(const NoRecordScope&) = delete;
  NoRecordScope& operator=(const NoRecordScope&) = delete;

 private:
  Tape<T>* previous_;
};

/// Backward over the record active on this thread.
template <class T>
void backward(const BasicTensor<T>& loss);

/// True when an op over `inputs` must be recorded.
template <class T>
bool should_record(std::initializer_list<const BasicTensor<T>*> inputs);

/// Creates the output tensor of an op and, when recording, registers its
/// backward closure. The closure reads d(loss)/d(output) from `out.grad`.
template <class T>
BasicTensor<T> make_result(const std::string& op, Shape shape, std::vector<T> values, bool record,
                           typename Tape<T>::BackwardFn fn);

/// Accumulation target for an input's gradient, or nullptr if the input is untracked.
template <class T>
T* grad_target(const BasicTensor<T>& input);

}  // namespace gcpress
