#include "gcpress/ops.hpp"

#include <cmath>

#include "gcpress/kernels/conv.hpp"
#include "gcpress/parallel.hpp"

namespace gcpress {

namespace {

template <class T>
void require_rank4(const BasicTensor<T>& t, const char* op) {
  if (!t.defined() || t.rank() != 4)
    throw ConfigError(std::string(op) + ": expected NCHW tensor, got " +
                      (t.defined() ? shape_to_string(t.shape()) : std::string("undefined")));
}

template <class T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
  if (a.shape() != b.shape())
    throw UsageError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
}

template <class T>
void check_bias(const BasicTensor<T>& bias, int channels, const char* op) {
  if (bias.defined() && (bias.numel() != static_cast<std::size_t>(channels)))
    throw ConfigError(std::string(op) + ": bias has " + std::to_string(bias.numel()) + " entries, expected " +
                      std::to_string(channels));
}

template <class T>
std::span<const T> maybe(const BasicTensor<T>& t) {
  return t.defined() ? t.data() : std::span<const T>{};
}

}  // namespace

template <class T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weight, const BasicTensor<T>& bias,
                      int stride, int pad) {
  require_rank4(input, "conv2d");
  require_rank4(weight, "conv2d");
  if (weight.dim(1) != input.dim(1))
    throw ConfigError("conv2d: weight expects " + std::to_string(weight.dim(1)) + " input channels, got " +
                      std::to_string(input.dim(1)));
  if (weight.dim(2) != weight.dim(3)) throw ConfigError("conv2d: only square kernels are supported");
  check_bias(bias, weight.dim(0), "conv2d");
  const auto g = kernels::ConvGeometry::make(input.dim(0), input.dim(1), input.dim(2), input.dim(3), weight.dim(0),
                                             weight.dim(2), stride, pad);
  std::vector<T> out(static_cast<std::size_t>(g.batch) * g.out_channels * g.out_h * g.out_w);
  kernels::conv2d_forward<T>(g, input.data(), weight.data(), maybe(bias), out);
  const bool record = should_record<T>({&input, &weight, &bias});
  return make_result<T>("conv2d", {g.batch, g.out_channels, g.out_h, g.out_w}, std::move(out), record,
                        [input, weight, bias, g](const detail::TensorNode<T>& res) {
                          const std::span<const T> gout = res.grad;
                          if (T* gx = grad_target(input))
                            kernels::conv2d_backward_input<T>(g, gout, weight.data(),
                                                              std::span<T>(gx, input.numel()));
                          T* gw = grad_target(weight);
                          T* gb = grad_target(bias);
                          if (gw != nullptr || gb != nullptr) {
                            std::vector<T> scratch_w;
                            if (gw == nullptr) {
                              scratch_w.assign(weight.numel(), T(0));
                              gw = scratch_w.data();
                            }
                            kernels::conv2d_backward_weight<T>(
                                g, input.data(), gout, std::span<T>(gw, weight.numel()),
                                gb ? std::span<T>(gb, bias.numel()) : std::span<T>{});
                          }
                        });
}

template <class T>
BasicTensor<T> conv2d_transpose(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                                const BasicTensor<T>& bias, int stride, int pad, int output_pad) {
  require_rank4(input, "conv2d_transpose");
  require_rank4(weight, "conv2d_transpose");
  if (weight.dim(0) != input.dim(1))
    throw ConfigError("conv2d_transpose: weight expects " + std::to_string(weight.dim(0)) +
                      " input channels, got " + std::to_string(input.dim(1)));
  if (weight.dim(2) != weight.dim(3)) throw ConfigError("conv2d_transpose: only square kernels are supported");
  if (stride < 1 || output_pad < 0 || (output_pad > 0 && output_pad >= stride))
    throw ConfigError("conv2d_transpose: invalid stride/output padding");
  const int k = weight.dim(2);
  const int out_c = weight.dim(1);
  check_bias(bias, out_c, "conv2d_transpose");
  const int out_h = (input.dim(2) - 1) * stride - 2 * pad + k + output_pad;
  const int out_w = (input.dim(3) - 1) * stride - 2 * pad + k + output_pad;
  if (out_h < 1 || out_w < 1) throw ConfigError("conv2d_transpose: empty output");
  // Geometry of the forward conv this op is the adjoint of.
  const auto g = kernels::ConvGeometry::make(input.dim(0), out_c, out_h, out_w, input.dim(1), k, stride, pad);
  if (g.out_h != input.dim(2) || g.out_w != input.dim(3))
    throw ConfigError("conv2d_transpose: inconsistent geometry");
  const int n = input.dim(0);
  std::vector<T> out(static_cast<std::size_t>(n) * out_c * out_h * out_w, T(0));
  kernels::conv2d_backward_input<T>(g, input.data(), weight.data(), out);
  if (bias.defined()) {
    const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < out_c; ++c) {
        T* p = out.data() + (static_cast<std::size_t>(b) * out_c + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) p[i] += bias.data()[c];
      }
  }
  const bool record = should_record<T>({&input, &weight, &bias});
  return make_result<T>(
      "conv2d_transpose", {n, out_c, out_h, out_w}, std::move(out), record,
      [input, weight, bias, g](const detail::TensorNode<T>& res) {
        const std::span<const T> gout = res.grad;
        if (T* gx = grad_target(input)) {
          std::vector<T> tmp(input.numel());
          kernels::conv2d_forward<T>(g, gout, weight.data(), {}, tmp);
          for (std::size_t i = 0; i < tmp.size(); ++i) gx[i] += tmp[i];
        }
        if (T* gw = grad_target(weight))
          kernels::conv2d_backward_weight<T>(g, gout, input.data(), std::span<T>(gw, weight.numel()), {});
        if (T* gb = grad_target(bias)) {
          const std::size_t plane = static_cast<std::size_t>(g.in_h) * g.in_w;
          for (int b = 0; b < g.batch; ++b)
            for (int c = 0; c < g.in_channels; ++c) {
              const T* p = gout.data() + (static_cast<std::size_t>(b) * g.in_channels + c) * plane;
              T acc = T(0);
              for (std::size_t i = 0; i < plane; ++i) acc += p[i];
              gb[c] += acc;
            }
        }
      });
}

template <class T>
BasicTensor<T> instance_norm(const BasicTensor<T>& input, const BasicTensor<T>& gain, const BasicTensor<T>& shift,
                             T eps) {
  require_rank4(input, "instance_norm");
  const int n = input.dim(0), c = input.dim(1);
  const std::size_t plane = static_cast<std::size_t>(input.dim(2)) * input.dim(3);
  if (plane == 0) throw ConfigError("instance_norm: empty plane");
  check_bias(gain, c, "instance_norm");
  check_bias(shift, c, "instance_norm");
  const std::size_t planes = static_cast<std::size_t>(n) * c;
  std::vector<T> xhat(input.numel());
  std::vector<T> inv_std(planes);
  std::vector<T> out(input.numel());
  const T* x = input.data().data();
  const int nt = num_threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (long long p = 0; p < static_cast<long long>(planes); ++p) {
    const T* xp = x + p * plane;
    T mu = T(0);
    for (std::size_t i = 0; i < plane; ++i) mu += xp[i];
    mu /= static_cast<T>(plane);
    T var = T(0);
    for (std::size_t i = 0; i < plane; ++i) var += (xp[i] - mu) * (xp[i] - mu);
    var /= static_cast<T>(plane);
    const T inv = T(1) / std::sqrt(var + eps);
    inv_std[p] = inv;
    const int ch = static_cast<int>(p % c);
    const T gv = gain.defined() ? gain.data()[ch] : T(1);
    const T sv = shift.defined() ? shift.data()[ch] : T(0);
    for (std::size_t i = 0; i < plane; ++i) {
      const T h = (xp[i] - mu) * inv;
      xhat[p * plane + i] = h;
      out[p * plane + i] = gv * h + sv;
    }
  }
  const bool record = should_record<T>({&input, &gain, &shift});
  return make_result<T>(
      "instance_norm", input.shape(), std::move(out), record,
      [input, gain, shift, xhat = std::move(xhat), inv_std = std::move(inv_std), planes, plane,
       c](const detail::TensorNode<T>& res) {
        const T* gout = res.grad.data();
        T* gx = grad_target(input);
        T* gg = grad_target(gain);
        T* gs = grad_target(shift);
        const T m = static_cast<T>(plane);
        for (std::size_t p = 0; p < planes; ++p) {
          const int ch = static_cast<int>(p % c);
          const T gv = gain.defined() ? gain.data()[ch] : T(1);
          const T* dy = gout + p * plane;
          const T* h = xhat.data() + p * plane;
          T sum_dy = T(0), sum_dy_h = T(0);
          for (std::size_t i = 0; i < plane; ++i) {
            sum_dy += dy[i];
            sum_dy_h += dy[i] * h[i];
          }
          if (gg) gg[ch] += sum_dy_h;
          if (gs) gs[ch] += sum_dy;
          if (gx) {
            const T k = gv * inv_std[p] / m;
            T* dx = gx + p * plane;
            for (std::size_t i = 0; i < plane; ++i) dx[i] += k * (m * dy[i] - sum_dy - h[i] * sum_dy_h);
          }
        }
      });
}

template <class T>
BasicTensor<T> activation(const BasicTensor<T>& input, Activation kind) {
  if (kind.kind == ActivationKind::kLeakyRelu && !(kind.alpha > 0.0 && kind.alpha < 1.0))
    throw ConfigError("leaky_relu: alpha must lie in (0,1)");
  const auto& x = input.values();
  std::vector<T> out(x.size());
  const T alpha = static_cast<T>(kind.alpha);
  switch (kind.kind) {
    case ActivationKind::kRelu:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
      break;
    case ActivationKind::kLeakyRelu:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : alpha * x[i];
      break;
    case ActivationKind::kTanh:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
      break;
  }
  const bool record = should_record<T>({&input});
  const char* name = kind.kind == ActivationKind::kRelu ? "relu"
                     : kind.kind == ActivationKind::kTanh ? "tanh"
                                                          : "leaky_relu";
  return make_result<T>(name, input.shape(), std::move(out), record,
                        [input, kind, alpha](const detail::TensorNode<T>& res) {
                          T* gx = grad_target(input);
                          if (!gx) return;
                          const auto& xv = input.values();
                          const auto& gy = res.grad;
                          for (std::size_t i = 0; i < xv.size(); ++i) {
                            T d;
                            switch (kind.kind) {
                              case ActivationKind::kRelu:
                                d = xv[i] > T(0) ? T(1) : T(0);
                                break;
                              case ActivationKind::kLeakyRelu:
                                d = xv[i] > T(0) ? T(1) : alpha;
                                break;
                              default:
                                d = T(1) - res.data[i] * res.data[i];
                                break;
                            }
                            gx[i] += d * gy[i];
                          }
                        });
}

template <class T>
BasicTensor<T> avg_pool2d(const BasicTensor<T>& input, int k, int stride) {
  require_rank4(input, "avg_pool2d");
  if (k < 1 || stride < 1) throw ConfigError("avg_pool2d: window and stride must be >= 1");
  const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (k > h || k > w) throw ConfigError("avg_pool2d: window exceeds input");
  const int oh = (h - k) / stride + 1, ow = (w - k) / stride + 1;
  const T inv = T(1) / static_cast<T>(k * k);
  std::vector<T> out(static_cast<std::size_t>(n) * c * oh * ow);
  const T* x = input.data().data();
  for (int p = 0; p < n * c; ++p)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        T acc = T(0);
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j)
            acc += x[(static_cast<std::size_t>(p) * h + oy * stride + i) * w + ox * stride + j];
        out[(static_cast<std::size_t>(p) * oh + oy) * ow + ox] = acc * inv;
      }
  const bool record = should_record<T>({&input});
  return make_result<T>("avg_pool2d", {n, c, oh, ow}, std::move(out), record,
                        [input, k, stride, n, c, h, w, oh, ow, inv](const detail::TensorNode<T>& res) {
                          T* gx = grad_target(input);
                          if (!gx) return;
                          for (int p = 0; p < n * c; ++p)
                            for (int oy = 0; oy < oh; ++oy)
                              for (int ox = 0; ox < ow; ++ox) {
                                const T g = res.grad[(static_cast<std::size_t>(p) * oh + oy) * ow + ox] * inv;
                                for (int i = 0; i < k; ++i)
                                  for (int j = 0; j < k; ++j)
                                    gx[(static_cast<std::size_t>(p) * h + oy * stride + i) * w + ox * stride + j] +=
                                        g;
                              }
                        });
}

template <class T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_result<T>("add", a.shape(), std::move(out), should_record<T>({&a, &b}),
                        [a, b](const detail::TensorNode<T>& res) {
                          if (T* ga = grad_target(a))
                            for (std::size_t i = 0; i < res.grad.size(); ++i) ga[i] += res.grad[i];
                          if (T* gb = grad_target(b))
                            for (std::size_t i = 0; i < res.grad.size(); ++i) gb[i] += res.grad[i];
                        });
}

template <class T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return make_result<T>("sub", a.shape(), std::move(out), should_record<T>({&a, &b}),
                        [a, b](const detail::TensorNode<T>& res) {
                          if (T* ga = grad_target(a))
                            for (std::size_t i = 0; i < res.grad.size(); ++i) ga[i] += res.grad[i];
                          if (T* gb = grad_target(b))
                            for (std::size_t i = 0; i < res.grad.size(); ++i) gb[i] -= res.grad[i];
                        });
}

template <class T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_result<T>("mul", a.shape(), std::move(out), should_record<T>({&a, &b}),
                        [a, b](const detail::TensorNode<T>& res) {
                          if (T* ga = grad_target(a))
                            for (std::size_t i = 0; i < res.grad.size(); ++i) ga[i] += res.grad[i] * b.values()[i];
                          if (T* gb = grad_target(b))
                            for (std::size_t i = 0; i < res.grad.size(); ++i) gb[i] += res.grad[i] * a.values()[i];
                        });
}

template <class T>
BasicTensor<T> add_scalar(const BasicTensor<T>& a, T value) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + value;
  return make_result<T>("add_scalar", a.shape(), std::move(out), should_record<T>({&a}),
                        [a](const detail::TensorNode<T>& res) {
                          if (T* ga = grad_target(a))
                            for (std::size_t i = 0; i < res.grad.size(); ++i) ga[i] += res.grad[i];
                        });
}

template <class T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * factor;
  return make_result<T>("scale", a.shape(), std::move(out), should_record<T>({&a}),
                        [a, factor](const detail::TensorNode<T>& res) {
                          if (T* ga = grad_target(a))
                            for (std::size_t i = 0; i < res.grad.size(); ++i) ga[i] += res.grad[i] * factor;
                        });
}

template <class T>
BasicTensor<T> square(const BasicTensor<T>& a) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * a.values()[i];
  return make_result<T>("square", a.shape(), std::move(out), should_record<T>({&a}),
                        [a](const detail::TensorNode<T>& res) {
                          if (T* ga = grad_target(a))
                            for (std::size_t i = 0; i < res.grad.size(); ++i)
                              ga[i] += T(2) * a.values()[i] * res.grad[i];
                        });
}

template <class T>
BasicTensor<T> abs(const BasicTensor<T>& a) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(a.values()[i]);
  return make_result<T>("abs", a.shape(), std::move(out), should_record<T>({&a}),
                        [a](const detail::TensorNode<T>& res) {
                          if (T* ga = grad_target(a))
                            for (std::size_t i = 0; i < res.grad.size(); ++i) {
                              const T v = a.values()[i];
                              ga[i] += (v > T(0) ? T(1) : v < T(0) ? T(-1) : T(0)) * res.grad[i];
                            }
                        });
}

template <class T>
BasicTensor<T> sum(const BasicTensor<T>& a) {
  T acc = T(0);
  for (const T v : a.values()) acc += v;
  return make_result<T>("sum", {1}, {acc}, should_record<T>({&a}), [a](const detail::TensorNode<T>& res) {
    if (T* ga = grad_target(a))
      for (std::size_t i = 0; i < a.numel(); ++i) ga[i] += res.grad[0];
  });
}

template <class T>
BasicTensor<T> mean(const BasicTensor<T>& a) {
  if (a.numel() == 0) throw UsageError("mean: empty tensor");
  return scale(sum(a), T(1) / static_cast<T>(a.numel()));
}

template <class T>
BasicTensor<T> concat_channels(const std::vector<BasicTensor<T>>& parts) {
  if (parts.empty()) throw UsageError("concat_channels: no inputs");
  for (const auto& p : parts) require_rank4(p, "concat_channels");
  const int n = parts[0].dim(0), h = parts[0].dim(2), w = parts[0].dim(3);
  int total_c = 0;
  for (const auto& p : parts) {
    if (p.dim(0) != n || p.dim(2) != h || p.dim(3) != w)
      throw UsageError("concat_channels: mismatched batch or spatial extents");
    total_c += p.dim(1);
  }
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<T> out(static_cast<std::size_t>(n) * total_c * plane);
  bool record = false;
  int offset = 0;
  for (const auto& p : parts) {
    const int c = p.dim(1);
    for (int b = 0; b < n; ++b)
      std::copy(p.values().begin() + static_cast<long long>(b) * c * plane,
                p.values().begin() + static_cast<long long>(b + 1) * c * plane,
                out.begin() + (static_cast<long long>(b) * total_c + offset) * plane);
    offset += c;
    record = record || should_record<T>({&p});
  }
  return make_result<T>("concat_channels", {n, total_c, h, w}, std::move(out), record,
                        [parts, n, total_c, plane](const detail::TensorNode<T>& res) {
                          int off = 0;
                          for (const auto& p : parts) {
                            const int c = p.dim(1);
                            if (T* gp = grad_target(p)) {
                              for (int b = 0; b < n; ++b) {
                                const T* src = res.grad.data() + (static_cast<std::size_t>(b) * total_c + off) * plane;
                                T* dst = gp + static_cast<std::size_t>(b) * c * plane;
                                for (std::size_t i = 0; i < c * plane; ++i) dst[i] += src[i];
                              }
                            }
                            off += c;
                          }
                        });
}

#define GCPRESS_INSTANTIATE(T)                                                                                 \
  template BasicTensor<T> conv2d<T>(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, int, \
                                    int);                                                                      \
  template BasicTensor<T> conv2d_transpose<T>(const BasicTensor<T>&, const BasicTensor<T>&,                    \
                                              const BasicTensor<T>&, int, int, int);                           \
  template BasicTensor<T> instance_norm<T>(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, \
                                           T);                                                                 \
  template BasicTensor<T> activation<T>(const BasicTensor<T>&, Activation);                                    \
  template BasicTensor<T> avg_pool2d<T>(const BasicTensor<T>&, int, int);                                      \
  template BasicTensor<T> add<T>(const BasicTensor<T>&, const BasicTensor<T>&);                                \
  template BasicTensor<T> sub<T>(const BasicTensor<T>&, const BasicTensor<T>&);                                \
  template BasicTensor<T> mul<T>(const BasicTensor<T>&, const BasicTensor<T>&);                                \
  template BasicTensor<T> add_scalar<T>(const BasicTensor<T>&, T);                                             \
  template BasicTensor<T> scale<T>(const BasicTensor<T>&, T);                                                  \
  template BasicTensor<T> square<T>(const BasicTensor<T>&);                                                    \
  template BasicTensor<T> abs<T>(const BasicTensor<T>&);                                                       \
  template BasicTensor<T> sum<T>(const BasicTensor<T>&);                                                       \
  template BasicTensor<T> mean<T>(const BasicTensor<T>&);                                                      \
  template BasicTensor<T> concat_channels<T>(const std::vector<BasicTensor<T>>&);

GCPRESS_INSTANTIATE(float)
GCPRESS_INSTANTIATE(double)
#undef GCPRESS_INSTANTIATE

}  // namespace gcpress
