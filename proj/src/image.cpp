#include "gcpress/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

#include "gcpress/checkpoint.hpp"

namespace gcpress {

Image read_png(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
    throw FormatError(path.string() + ": not a readable PNG (" + png.message + ")");
  png.format = PNG_FORMAT_RGB;
  Image img(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, img.rgb.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw CorruptionError(path.string() + ": " + msg);
  }
  return img;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.rgb.data(), 0, nullptr))
    throw UsageError(std::string("PNG encode failed: ") + png.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.rgb.data(), 0, nullptr))
    throw UsageError(std::string("PNG encode failed: ") + png.message);
  out.resize(size);
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) { write_file_atomic(path, encode_png(image)); }

Tensor image_to_tensor(const Image& image) {
  const std::size_t plane = static_cast<std::size_t>(image.width) * image.height;
  std::vector<float> v(plane * 3);
  for (std::size_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) v[static_cast<std::size_t>(c) * plane + i] = image.rgb[i * 3 + c] / 127.5f - 1.0f;
  return Tensor::from({1, 3, image.height, image.width}, std::move(v));
}

Image tensor_to_image(const Tensor& t, int width, int height) {
  if (t.rank() != 4 || t.dim(1) != 3 || t.dim(2) < height || t.dim(3) < width)
    throw UsageError("tensor_to_image: expected 1 x 3 x H x W covering " + std::to_string(width) + "x" +
                     std::to_string(height) + ", got " + shape_to_string(t.shape()));
  const int tw = t.dim(3), th = t.dim(2);
  Image img(width, height);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double v = t.values()[(static_cast<std::size_t>(c) * th + y) * tw + x];
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::round((v + 1.0) * 127.5), 0.0, 255.0));
      }
  return img;
}

Image tensor_to_image(const Tensor& t) { return tensor_to_image(t, t.dim(3), t.dim(2)); }

Image resize_area(const Image& image, int width, int height) {
  if (width < 1 || height < 1) throw UsageError("resize: empty target size");
  // Separable box filter with fractional pixel coverage.
  auto weights = [](int src, int dst) {
    std::vector<std::vector<std::pair<int, double>>> w(static_cast<std::size_t>(dst));
    const double scale = static_cast<double>(src) / dst;
    for (int d = 0; d < dst; ++d) {
      const double lo = d * scale, hi = (d + 1) * scale;
      if (scale <= 1.0) {
        // Upsampling: linear interpolation between neighbouring centers.
        const double pos = (d + 0.5) * scale - 0.5;
        const int i0 = std::clamp(static_cast<int>(std::floor(pos)), 0, src - 1);
        const int i1 = std::min(i0 + 1, src - 1);
        const double f = std::clamp(pos - i0, 0.0, 1.0);
        w[static_cast<std::size_t>(d)] = {{i0, 1.0 - f}, {i1, f}};
        continue;
      }
      for (int s = static_cast<int>(std::floor(lo)); s < std::min(src, static_cast<int>(std::ceil(hi))); ++s) {
        const double cover = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
        if (cover > 0) w[static_cast<std::size_t>(d)].emplace_back(s, cover / scale);
      }
    }
    return w;
  };
  const auto wx = weights(image.width, width);
  const auto wy = weights(image.height, height);
  std::vector<double> rows(static_cast<std::size_t>(image.height) * width * 3, 0.0);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < width; ++x)
      for (const auto& [sx, w] : wx[static_cast<std::size_t>(x)])
        for (int c = 0; c < 3; ++c)
          rows[(static_cast<std::size_t>(y) * width + x) * 3 + c] += w * image.at(sx, y, c);
  Image out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (const auto& [sy, w] : wy[static_cast<std::size_t>(y)])
          acc += w * rows[(static_cast<std::size_t>(sy) * width + x) * 3 + c];
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::round(acc), 0.0, 255.0));
      }
  return out;
}

Image crop(const Image& image, int x0, int y0, int width, int height) {
  if (x0 < 0 || y0 < 0 || width < 1 || height < 1 || x0 + width > image.width || y0 + height > image.height)
    throw UsageError("crop window outside the image");
  Image out(width, height);
  for (int y = 0; y < height; ++y)
    std::copy_n(&image.rgb[(static_cast<std::size_t>(y0 + y) * image.width + x0) * 3], static_cast<std::size_t>(width) * 3,
                &out.rgb[static_cast<std::size_t>(y) * width * 3]);
  return out;
}

Image reflect_pad(const Image& image, int width, int height) {
  if (width < image.width || height < image.height) throw UsageError("reflect_pad: target smaller than image");
  auto mirror = [](int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    return i < n ? i : period - i;
  };
  Image out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = image.at(mirror(x, image.width), mirror(y, image.height), c);
  return out;
}

HsvMeans mean_hsv(const Image& image) {
  HsvMeans m;
  const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
  if (n == 0) return m;
  for (std::size_t i = 0; i < n; ++i) {
    const int r = image.rgb[i * 3], g = image.rgb[i * 3 + 1], b = image.rgb[i * 3 + 2];
    const int hi = std::max({r, g, b}), lo = std::min({r, g, b});
    m.value += hi / 255.0;
    m.saturation += hi == 0 ? 0.0 : static_cast<double>(hi - lo) / hi;
  }
  m.saturation /= static_cast<double>(n);
  m.value /= static_cast<double>(n);
  return m;
}

}  // namespace gcpress
