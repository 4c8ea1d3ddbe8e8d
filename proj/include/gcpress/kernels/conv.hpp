#pragma once

#include <span>

namespace gcpress::kernels {

/// Geometry of a 2-D convolution over NCHW input with OIKK weights.
/// The same geometry describes the matching transposed convolution with the
/// roles of (in_*) and (out_*) swapped.
struct ConvGeometry {
  int batch = 1;
  int in_channels = 1;
  int in_h = 1;
  int in_w = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;
  int pad = 0;
  int out_h = 1;
  int out_w = 1;

  static ConvGeometry make(int batch, int in_c, int in_h, int in_w, int out_c, int kernel, int stride,
                           int pad);
  long long weight_size() const { return 1LL * out_channels * in_channels * kernel * kernel; }
};

// Blocked OpenMP kernels: im2col + GEMM, parallel over independent output
// tiles so every output element is reduced in a fixed order.

/// y = conv(x, w) + b. `b` may be empty.
template <class T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> w, std::span<const T> b,
                    std::span<T> y);
/// dx += conv^T(dy, w).
template <class T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> dy, std::span<const T> w, std::span<T> dx);
/// dw += d<y,dy>/dw; db += sum of dy per channel (db may be empty).
template <class T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> x, std::span<const T> dy, std::span<T> dw,
                            std::span<T> db);

/// C[MxN] (+)= op(A) * op(B), row-major.
template <class T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, std::span<const T> a, std::span<const T> b,
          std::span<T> c, bool accumulate);

namespace ref {

// Direct nested-loop kernels. Serial; used as the test oracle and benchmark baseline.

template <class T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> w, std::span<const T> b,
                    std::span<T> y);
template <class T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> dy, std::span<const T> w, std::span<T> dx);
template <class T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> x, std::span<const T> dy, std::span<T> dw,
                            std::span<T> db);
template <class T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, std::span<const T> a, std::span<const T> b,
          std::span<T> c, bool accumulate);

}  // namespace ref

}  // namespace gcpress::kernels
