#include <algorithm>

#include "gcpress/errors.hpp"
#include "gcpress/kernels/conv.hpp"

namespace gcpress::kernels {

ConvGeometry ConvGeometry::make(int batch, int in_c, int in_h, int in_w, int out_c, int kernel, int stride,
                                int pad) {
  if (stride < 1 || kernel < 1 || pad < 0) throw ConfigError("convolution: invalid kernel/stride/pad");
  ConvGeometry g;
  g.batch = batch;
  g.in_channels = in_c;
  g.in_h = in_h;
  g.in_w = in_w;
  g.out_channels = out_c;
  g.kernel = kernel;
  g.stride = stride;
  g.pad = pad;
  if (in_h + 2 * pad < kernel || in_w + 2 * pad < kernel)
    throw ConfigError("convolution: kernel larger than padded input");
  g.out_h = (in_h + 2 * pad - kernel) / stride + 1;
  g.out_w = (in_w + 2 * pad - kernel) / stride + 1;
  return g;
}

namespace ref {

namespace {

template <class T>
inline std::size_t xi(const ConvGeometry& g, int n, int c, int y, int x) {
  return ((static_cast<std::size_t>(n) * g.in_channels + c) * g.in_h + y) * g.in_w + x;
}
template <class T>
inline std::size_t yi(const ConvGeometry& g, int n, int o, int y, int x) {
  return ((static_cast<std::size_t>(n) * g.out_channels + o) * g.out_h + y) * g.out_w + x;
}
inline std::size_t wi(const ConvGeometry& g, int o, int c, int ki, int kj) {
  return ((static_cast<std::size_t>(o) * g.in_channels + c) * g.kernel + ki) * g.kernel + kj;
}

}  // namespace

template <class T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> w, std::span<const T> b,
                    std::span<T> y) {
  for (int n = 0; n < g.batch; ++n)
    for (int o = 0; o < g.out_channels; ++o)
      for (int oy = 0; oy < g.out_h; ++oy)
        for (int ox = 0; ox < g.out_w; ++ox) {
          T acc = b.empty() ? T(0) : b[o];
          for (int c = 0; c < g.in_channels; ++c)
            for (int ki = 0; ki < g.kernel; ++ki)
              for (int kj = 0; kj < g.kernel; ++kj) {
                const int iy = oy * g.stride - g.pad + ki;
                const int ix = ox * g.stride - g.pad + kj;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                acc += w[wi(g, o, c, ki, kj)] * x[xi<T>(g, n, c, iy, ix)];
              }
          y[yi<T>(g, n, o, oy, ox)] = acc;
        }
}

template <class T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> dy, std::span<const T> w, std::span<T> dx) {
  for (int n = 0; n < g.batch; ++n)
    for (int o = 0; o < g.out_channels; ++o)
      for (int oy = 0; oy < g.out_h; ++oy)
        for (int ox = 0; ox < g.out_w; ++ox) {
          const T gy = dy[yi<T>(g, n, o, oy, ox)];
          for (int c = 0; c < g.in_channels; ++c)
            for (int ki = 0; ki < g.kernel; ++ki)
              for (int kj = 0; kj < g.kernel; ++kj) {
                const int iy = oy * g.stride - g.pad + ki;
                const int ix = ox * g.stride - g.pad + kj;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                dx[xi<T>(g, n, c, iy, ix)] += w[wi(g, o, c, ki, kj)] * gy;
              }
        }
}

template <class T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> x, std::span<const T> dy, std::span<T> dw,
                            std::span<T> db) {
  for (int n = 0; n < g.batch; ++n)
    for (int o = 0; o < g.out_channels; ++o)
      for (int oy = 0; oy < g.out_h; ++oy)
        for (int ox = 0; ox < g.out_w; ++ox) {
          const T gy = dy[yi<T>(g, n, o, oy, ox)];
          if (!db.empty()) db[o] += gy;
          for (int c = 0; c < g.in_channels; ++c)
            for (int ki = 0; ki < g.kernel; ++ki)
              for (int kj = 0; kj < g.kernel; ++kj) {
                const int iy = oy * g.stride - g.pad + ki;
                const int ix = ox * g.stride - g.pad + kj;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                dw[wi(g, o, c, ki, kj)] += x[xi<T>(g, n, c, iy, ix)] * gy;
              }
        }
}

template <class T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, std::span<const T> a, std::span<const T> b,
          std::span<T> c, bool accumulate) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      T acc = accumulate ? c[static_cast<std::size_t>(i) * n + j] : T(0);
      for (int p = 0; p < k; ++p) {
        const T av = trans_a ? a[static_cast<std::size_t>(p) * m + i] : a[static_cast<std::size_t>(i) * k + p];
        const T bv = trans_b ? b[static_cast<std::size_t>(j) * k + p] : b[static_cast<std::size_t>(p) * n + j];
        acc += av * bv;
      }
      c[static_cast<std::size_t>(i) * n + j] = acc;
    }
}

#define GCPRESS_INSTANTIATE(T)                                                                              \
  template void gemm<T>(bool, bool, int, int, int, std::span<const T>, std::span<const T>, std::span<T>,   \
                        bool);                                                                              \
  template void conv2d_forward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,             \
                                  std::span<const T>, std::span<T>);                                        \
  template void conv2d_backward_input<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,      \
                                         std::span<T>);                                                     \
  template void conv2d_backward_weight<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,     \
                                          std::span<T>, std::span<T>);

GCPRESS_INSTANTIATE(float)
GCPRESS_INSTANTIATE(double)
#undef GCPRESS_INSTANTIATE

}  // namespace ref
}  // namespace gcpress::kernels
