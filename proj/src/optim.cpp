#include "gcpress/optim.hpp"

#include <cmath>

namespace gcpress {

template <class T>
void adam_step(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v, const AdamOptions& opt,
               long long t) {
  if (t < 1) throw UsageError("adam_step: step count must be >= 1");
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(t));
  const T b1 = static_cast<T>(opt.beta1), b2 = static_cast<T>(opt.beta2);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T g = grad[i];
    m[i] = b1 * m[i] + (T(1) - b1) * g;
    v[i] = b2 * v[i] + (T(1) - b2) * g * g;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    param[i] -= static_cast<T>(opt.lr * mhat / (std::sqrt(vhat) + opt.eps));
  }
}

template <class T>
Adam<T>::Adam(std::vector<BasicTensor<T>> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), T(0));
    v_.emplace_back(p.numel(), T(0));
  }
}

template <class T>
void Adam<T>::step() {
  ++t_;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    if (!p.has_grad()) continue;
    adam_step<T>(p.data(), p.grad(), m_[k], v_[k], options_, t_);
    p.zero_grad();
  }
}

template <class T>
void Adam<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template void adam_step<float>(std::span<float>, std::span<const float>, std::span<float>, std::span<float>,
                               const AdamOptions&, long long);
template void adam_step<double>(std::span<double>, std::span<const double>, std::span<double>, std::span<double>,
                                const AdamOptions&, long long);
template class Adam<float>;
template class Adam<double>;

}  // namespace gcpress
