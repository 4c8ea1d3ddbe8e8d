#pragma once

#include <cstdint>
#include <vector>

#include "gcpress/tensor.hpp"

namespace gcpress {

/// Ordered quantization centers plus the softness used by the training
/// relaxation.
class CenterSet {
 public:
  /// {-2,-1,0,1,2}, sigma 1.
  CenterSet();
  explicit CenterSet(std::vector<float> centers, float sigma = 1.0f);

  int size() const { return static_cast<int>(centers_.size()); }
  float operator[](int i) const { return centers_[static_cast<std::size_t>(i)]; }
  const std::vector<float>& values() const { return centers_; }
  float sigma() const { return sigma_; }

  /// Index of the nearest center; midpoint ties go to the lower index.
  int nearest(double value) const;
  /// Index of a center exactly equal to 0, or -1.
  int zero_index() const;
  /// Largest gap between neighbouring centers.
  float max_gap() const;

 private:
  std::vector<float> centers_;
  float sigma_ = 1.0f;
};

/// Quantized latent: symbols in [0, L) stored channel-major, i.e. index
/// (c * height + y) * width + x. Logical shape is (height, width, channels).
struct CodeGrid {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> symbols;
  CenterSet centers;

  CodeGrid() = default;
  CodeGrid(int h, int w, int c, CenterSet centers);

  std::size_t size() const { return symbols.size(); }
  std::size_t positions() const { return static_cast<std::size_t>(height) * width; }
  std::uint8_t& at(int y, int x, int c) { return symbols[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  std::uint8_t at(int y, int x, int c) const {
    return symbols[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  std::span<const std::uint8_t> channel(int c) const {
    return std::span(symbols).subspan(static_cast<std::size_t>(c) * positions(), positions());
  }

  bool operator==(const CodeGrid& other) const {
    return height == other.height && width == other.width && channels == other.channels &&
           symbols == other.symbols && centers.values() == other.centers.values();
  }
};

/// Nearest-center symbols of a 1xCxhxw latent.
CodeGrid quantize_hard(const Tensor& w, const CenterSet& centers);

/// Symbols back to center values as a 1xCxhxw tensor.
Tensor dequantize(const CodeGrid& code);

/// Soft assignment sum_j c_j softmax_j(-sigma (w - c_j)^2), differentiable.
template <class T>
BasicTensor<T> quantize_soft(const BasicTensor<T>& w, const CenterSet& centers);

/// Straight-through quantizer: forward emits the nearest center exactly,
/// backward uses the derivative of quantize_soft.
template <class T>
BasicTensor<T> quantize_soft_st(const BasicTensor<T>& w, const CenterSet& centers);

}  // namespace gcpress
