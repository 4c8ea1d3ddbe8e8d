#include <algorithm>
#include <vector>

#include "gcpress/kernels/conv.hpp"
#include "gcpress/parallel.hpp"

namespace gcpress::kernels {

namespace {

constexpr int kTileN = 256;

// C[MxN] += A[MxK] * B[KxN]; every C element accumulates over k in order.
template <class T>
void gemm_nn(int m, int n, int k, const T* a, const T* b, T* c) {
  const int tiles = (n + kTileN - 1) / kTileN;
  const int nt = num_threads();
#pragma omp parallel for collapse(2) schedule(static) num_threads(nt) if (nt > 1)
  for (int i = 0; i < m; ++i) {
    for (int t = 0; t < tiles; ++t) {
      const int j0 = t * kTileN;
      const int j1 = std::min(n, j0 + kTileN);
      T* crow = c + static_cast<long long>(i) * n;
      const T* arow = a + static_cast<long long>(i) * k;
      for (int p = 0; p < k; ++p) {
        const T av = arow[p];
        const T* brow = b + static_cast<long long>(p) * n;
        for (int j = j0; j < j1; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

template <class T>
std::vector<T> transpose(const T* src, int rows, int cols) {
  std::vector<T> out(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out[static_cast<std::size_t>(c) * rows + r] = src[static_cast<std::size_t>(r) * cols + c];
  return out;
}

bool is_pointwise(const ConvGeometry& g) { return g.kernel == 1 && g.stride == 1 && g.pad == 0; }

// cols[(c*K + ki)*K + kj][oy*out_w + ox] = x[c][oy*s - p + ki][ox*s - p + kj]
template <class T>
void im2col(const ConvGeometry& g, const T* x, T* cols) {
  const int k = g.kernel;
  const int rows = g.in_channels * k * k;
  const int npos = g.out_h * g.out_w;
  const int nt = num_threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (int r = 0; r < rows; ++r) {
    const int c = r / (k * k);
    const int ki = (r / k) % k;
    const int kj = r % k;
    const T* plane = x + static_cast<long long>(c) * g.in_h * g.in_w;
    T* dst = cols + static_cast<long long>(r) * npos;
    for (int oy = 0; oy < g.out_h; ++oy) {
      const int iy = oy * g.stride - g.pad + ki;
      T* drow = dst + oy * g.out_w;
      if (iy < 0 || iy >= g.in_h) {
        std::fill(drow, drow + g.out_w, T(0));
        continue;
      }
      const T* srow = plane + iy * g.in_w;
      for (int ox = 0; ox < g.out_w; ++ox) {
        const int ix = ox * g.stride - g.pad + kj;
        drow[ox] = (ix >= 0 && ix < g.in_w) ? srow[ix] : T(0);
      }
    }
  }
}

// Scatter-add inverse of im2col. Parallel over input channels: each channel
// plane only receives contributions from its own K*K rows, visited in order.
template <class T>
void col2im(const ConvGeometry& g, const T* cols, T* x) {
  const int k = g.kernel;
  const int npos = g.out_h * g.out_w;
  const int nt = num_threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (int c = 0; c < g.in_channels; ++c) {
    T* plane = x + static_cast<long long>(c) * g.in_h * g.in_w;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const T* src = cols + static_cast<long long>((c * k + ki) * k + kj) * npos;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.in_h) continue;
          T* prow = plane + iy * g.in_w;
          const T* srow = src + oy * g.out_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kj;
            if (ix >= 0 && ix < g.in_w) prow[ix] += srow[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <class T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, std::span<const T> a, std::span<const T> b,
          std::span<T> c, bool accumulate) {
  if (!accumulate) std::fill(c.begin(), c.begin() + static_cast<long long>(m) * n, T(0));
  std::vector<T> at, bt;
  const T* ap = a.data();
  const T* bp = b.data();
  if (trans_a) {
    at = transpose(a.data(), k, m);
    ap = at.data();
  }
  if (trans_b) {
    bt = transpose(b.data(), n, k);
    bp = bt.data();
  }
  gemm_nn(m, n, k, ap, bp, c.data());
}

template <class T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> w, std::span<const T> b,
                    std::span<T> y) {
  const int ckk = g.in_channels * g.kernel * g.kernel;
  const int npos = g.out_h * g.out_w;
  const long long in_plane = 1LL * g.in_channels * g.in_h * g.in_w;
  const long long out_plane = 1LL * g.out_channels * npos;
  std::vector<T> cols;
  if (!is_pointwise(g)) cols.resize(static_cast<std::size_t>(ckk) * npos);
  for (int n = 0; n < g.batch; ++n) {
    const T* xn = x.data() + n * in_plane;
    T* yn = y.data() + n * out_plane;
    for (int o = 0; o < g.out_channels; ++o) {
      const T bias = b.empty() ? T(0) : b[o];
      std::fill(yn + o * npos, yn + (o + 1) * npos, bias);
    }
    const T* src = xn;
    if (!cols.empty()) {
      im2col(g, xn, cols.data());
      src = cols.data();
    }
    gemm_nn(g.out_channels, npos, ckk, w.data(), src, yn);
  }
}

template <class T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> dy, std::span<const T> w, std::span<T> dx) {
  const int ckk = g.in_channels * g.kernel * g.kernel;
  const int npos = g.out_h * g.out_w;
  const long long in_plane = 1LL * g.in_channels * g.in_h * g.in_w;
  const long long out_plane = 1LL * g.out_channels * npos;
  const std::vector<T> wt = transpose(w.data(), g.out_channels, ckk);
  std::vector<T> cols(static_cast<std::size_t>(ckk) * npos);
  for (int n = 0; n < g.batch; ++n) {
    std::fill(cols.begin(), cols.end(), T(0));
    gemm_nn(ckk, npos, g.out_channels, wt.data(), dy.data() + n * out_plane, cols.data());
    T* dxn = dx.data() + n * in_plane;
    if (is_pointwise(g)) {
      for (long long i = 0; i < in_plane; ++i) dxn[i] += cols[i];
    } else {
      col2im(g, cols.data(), dxn);
    }
  }
}

template <class T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> x, std::span<const T> dy, std::span<T> dw,
                            std::span<T> db) {
  const int ckk = g.in_channels * g.kernel * g.kernel;
  const int npos = g.out_h * g.out_w;
  const long long in_plane = 1LL * g.in_channels * g.in_h * g.in_w;
  const long long out_plane = 1LL * g.out_channels * npos;
  std::vector<T> cols(static_cast<std::size_t>(ckk) * npos);
  for (int n = 0; n < g.batch; ++n) {
    const T* dyn = dy.data() + n * out_plane;
    if (is_pointwise(g)) {
      std::copy(x.data() + n * in_plane, x.data() + (n + 1) * in_plane, cols.begin());
    } else {
      im2col(g, x.data() + n * in_plane, cols.data());
    }
    const std::vector<T> cols_t = transpose(cols.data(), ckk, npos);
    gemm_nn(g.out_channels, ckk, npos, dyn, cols_t.data(), dw.data());
    if (!db.empty()) {
      for (int o = 0; o < g.out_channels; ++o) {
        T acc = T(0);
        for (int p = 0; p < npos; ++p) acc += dyn[o * npos + p];
        db[o] += acc;
      }
    }
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

}  // namespace gcpress::kernels
