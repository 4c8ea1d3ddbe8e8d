#include "gcpress/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gcpress/autograd.hpp"

namespace gcpress {

CenterSet::CenterSet() : CenterSet({-2.0f, -1.0f, 0.0f, 1.0f, 2.0f}, 1.0f) {}

CenterSet::CenterSet(std::vector<float> centers, float sigma) : centers_(std::move(centers)), sigma_(sigma) {
  if (centers_.size() < 2) throw ConfigError("centers: need at least 2");
  if (centers_.size() > 255) throw ConfigError("centers: at most 255 supported");
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    if (!std::isfinite(centers_[i])) throw ConfigError("centers: non-finite value");
    if (i > 0 && !(centers_[i - 1] < centers_[i])) throw ConfigError("centers: must be strictly increasing");
  }
  if (!(sigma_ > 0.0f)) throw ConfigError("centers: sigma must be positive");
}

int CenterSet::nearest(double value) const {
  if (!std::isfinite(value)) throw NumericalError("quantize: non-finite input");
  const auto it = std::upper_bound(centers_.begin(), centers_.end(), value,
                                   [](double v, float c) { return v < static_cast<double>(c); });
  if (it == centers_.begin()) return 0;
  if (it == centers_.end()) return size() - 1;
  const int hi = static_cast<int>(it - centers_.begin());
  const int lo = hi - 1;
  const double dlo = std::abs(value - static_cast<double>(centers_[lo]));
  const double dhi = std::abs(value - static_cast<double>(centers_[hi]));
  return dhi < dlo ? hi : lo;
}

int CenterSet::zero_index() const {
  for (int i = 0; i < size(); ++i)
    if (centers_[i] == 0.0f) return i;
  return -1;
}

float CenterSet::max_gap() const {
  float gap = 0.0f;
  for (std::size_t i = 1; i < centers_.size(); ++i) gap = std::max(gap, centers_[i] - centers_[i - 1]);
  return gap;
}

CodeGrid::CodeGrid(int h, int w, int c, CenterSet cs)
    : height(h), width(w), channels(c), symbols(static_cast<std::size_t>(h) * w * c, 0), centers(std::move(cs)) {
  if (h < 0 || w < 0 || c < 0) throw UsageError("code grid: negative extent");
}

CodeGrid quantize_hard(const Tensor& w, const CenterSet& centers) {
  if (w.rank() != 4 || w.dim(0) != 1) throw UsageError("quantize_hard: expected a 1xCxhxw latent");
  CodeGrid code(w.dim(2), w.dim(3), w.dim(1), centers);
  const auto& v = w.values();
  for (std::size_t i = 0; i < v.size(); ++i) code.symbols[i] = static_cast<std::uint8_t>(centers.nearest(v[i]));
  return code;
}

Tensor dequantize(const CodeGrid& code) {
  std::vector<float> out(code.symbols.size());
  const int levels = code.centers.size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int s = code.symbols[i];
    if (s >= levels) throw CorruptionError("dequantize: symbol " + std::to_string(s) + " out of range");
    out[i] = code.centers[s];
  }
  return Tensor::from({1, code.channels, code.height, code.width}, std::move(out));
}

namespace {

// Soft value and its derivative with respect to w.
template <class T>
void soft_assign(T w, const CenterSet& centers, T& value, T& deriv) {
  const int levels = centers.size();
  const T sigma = static_cast<T>(centers.sigma());
  T logits[256];
  T max_logit = -std::numeric_limits<T>::infinity();
  for (int j = 0; j < levels; ++j) {
    const T d = w - static_cast<T>(centers[j]);
    logits[j] = -sigma * d * d;
    max_logit = std::max(max_logit, logits[j]);
  }
  T z = T(0);
  T p[256];
  for (int j = 0; j < levels; ++j) {
    p[j] = std::exp(logits[j] - max_logit);
    z += p[j];
  }
  T mean_c = T(0), mean_dlogit = T(0), mean_c_dlogit = T(0);
  for (int j = 0; j < levels; ++j) {
    p[j] /= z;
    const T c = static_cast<T>(centers[j]);
    const T dlogit = T(-2) * sigma * (w - c);
    mean_c += p[j] * c;
    mean_dlogit += p[j] * dlogit;
    mean_c_dlogit += p[j] * c * dlogit;
  }
  value = mean_c;
  // d/dw sum_j c_j p_j = sum_j c_j p_j (dlogit_j - E[dlogit])
  deriv = mean_c_dlogit - mean_c * mean_dlogit;
}

template <class T>
BasicTensor<T> quantize_impl(const BasicTensor<T>& w, const CenterSet& centers, bool hard_forward) {
  const auto& x = w.values();
  std::vector<T> out(x.size());
  std::vector<T> deriv(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    T value;
    soft_assign<T>(x[i], centers, value, deriv[i]);
    out[i] = hard_forward ? static_cast<T>(centers[centers.nearest(static_cast<double>(x[i]))]) : value;
  }
  return make_result<T>(hard_forward ? "quantize_soft_st" : "quantize_soft", w.shape(), std::move(out),
                        should_record<T>({&w}),
                        [w, deriv = std::move(deriv)](const detail::TensorNode<T>& res) {
                          if (T* gw = grad_target(w))
                            for (std::size_t i = 0; i < deriv.size(); ++i) gw[i] += deriv[i] * res.grad[i];
                        });
}

}  // namespace

template <class T>
BasicTensor<T> quantize_soft(const BasicTensor<T>& w, const CenterSet& centers) {
  return quantize_impl(w, centers, false);
}

template <class T>
BasicTensor<T> quantize_soft_st(const BasicTensor<T>& w, const CenterSet& centers) {
  return quantize_impl(w, centers, true);
}

template BasicTensor<float> quantize_soft<float>(const BasicTensor<float>&, const CenterSet&);
template BasicTensor<double> quantize_soft<double>(const BasicTensor<double>&, const CenterSet&);
template BasicTensor<float> quantize_soft_st<float>(const BasicTensor<float>&, const CenterSet&);
template BasicTensor<double> quantize_soft_st<double>(const BasicTensor<double>&, const CenterSet&);

}  // namespace gcpress
