#pragma once

#include <vector>

#include "gcpress/autograd.hpp"
#include "gcpress/tensor.hpp"

namespace gcpress {

// Differentiable primitives. Image-like tensors are NCHW. Every op records
// itself on the active Tape when any input tracks gradients.

/// Zero-padded strided convolution; weight is OIKK, bias (O) may be undefined.
template <class T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weight, const BasicTensor<T>& bias,
                      int stride, int pad);

/// Adjoint of conv2d in its input. Weight is laid out (in, out, K, K), i.e. the
/// OIKK weight of the conv2d it transposes. Output extent is
/// (H-1)*stride - 2*pad + K + output_pad.
template <class T>
BasicTensor<T> conv2d_transpose(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                                const BasicTensor<T>& bias, int stride, int pad, int output_pad = 0);

template <class T>
BasicTensor<T> instance_norm(const BasicTensor<T>& input, const BasicTensor<T>& gain, const BasicTensor<T>& shift,
                             T eps = T(1e-5));

enum class ActivationKind { kRelu, kLeakyRelu, kTanh };

struct Activation {
  ActivationKind kind = ActivationKind::kRelu;
  double alpha = 0.2;  // leaky_relu slope

  static Activation relu() { return {ActivationKind::kRelu, 0.0}; }
  static Activation leaky_relu(double alpha) { return {ActivationKind::kLeakyRelu, alpha}; }
  static Activation tanh() { return {ActivationKind::kTanh, 0.0}; }
};

template <class T>
BasicTensor<T> activation(const BasicTensor<T>& input, Activation kind);
template <class T>
BasicTensor<T> relu(const BasicTensor<T>& input) {
  return activation(input, Activation::relu());
}
template <class T>
BasicTensor<T> leaky_relu(const BasicTensor<T>& input, double alpha) {
  return activation(input, Activation::leaky_relu(alpha));
}
template <class T>
BasicTensor<T> tanh(const BasicTensor<T>& input) {
  return activation(input, Activation::tanh());
}

/// Mean over each k x k window, no padding.
template <class T>
BasicTensor<T> avg_pool2d(const BasicTensor<T>& input, int k, int stride);

template <class T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <class T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <class T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <class T>
BasicTensor<T> add_scalar(const BasicTensor<T>& a, T value);
template <class T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor);
template <class T>
BasicTensor<T> square(const BasicTensor<T>& a);
template <class T>
BasicTensor<T> abs(const BasicTensor<T>& a);

/// Scalar reductions, shape {1}.
template <class T>
BasicTensor<T> sum(const BasicTensor<T>& a);
template <class T>
BasicTensor<T> mean(const BasicTensor<T>& a);

/// Channel-wise concatenation of NCHW tensors with equal N, H, W.
template <class T>
BasicTensor<T> concat_channels(const std::vector<BasicTensor<T>>& parts);

}  // namespace gcpress
