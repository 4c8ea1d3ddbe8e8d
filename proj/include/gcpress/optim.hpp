#pragma once

#include <vector>

#include "gcpress/tensor.hpp"

namespace gcpress {

struct AdamOptions {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update in place. `m` and `v` are the moment
/// buffers (zero at t = 1), `t` is the 1-based step count.
template <class T>
void adam_step(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v, const AdamOptions& opt,
               long long t);

/// Adam over a fixed parameter set. step() consumes the accumulated
/// gradients and clears them.
template <class T>
class Adam {
 public:
  Adam(std::vector<BasicTensor<T>> params, AdamOptions options);

  void step();
  void zero_grad();
  long long steps() const { return t_; }
  const AdamOptions& options() const { return options_; }

 private:
  std::vector<BasicTensor<T>> params_;
  std::vector<std::vector<T>> m_, v_;
  AdamOptions options_;
  long long t_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace gcpress
