#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gcpress/tensor.hpp"

namespace gcpress {

/// 8-bit RGB, interleaved, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t& at(int x, int y, int c) { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  bool operator==(const Image&) const = default;
};

Image read_png(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const Image& image);
/// Atomic: the file appears only once complete.
void write_png(const std::filesystem::path& path, const Image& image);

/// x / 127.5 - 1 as a 1 x 3 x H x W tensor.
Tensor image_to_tensor(const Image& image);
/// round((x + 1) * 127.5) clamped to [0, 255]; reads the top-left width x height window.
Image tensor_to_image(const Tensor& t, int width, int height);
Image tensor_to_image(const Tensor& t);

/// Area-averaging resample to the given size.
Image resize_area(const Image& image, int width, int height);
Image crop(const Image& image, int x0, int y0, int width, int height);
/// Mirror padding at the right and bottom edges up to the given size.
Image reflect_pad(const Image& image, int width, int height);

/// Mean HSV saturation and value over all pixels, both in [0, 1].
struct HsvMeans {
  double saturation = 0.0;
  double value = 0.0;
};
HsvMeans mean_hsv(const Image& image);

}  // namespace gcpress
