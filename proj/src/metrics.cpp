#include "gcpress/metrics.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <vector>

#include "gcpress/errors.hpp"

namespace gcpress {

namespace {

constexpr std::array<double, 5> kWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
constexpr double kC1 = (0.01 * 255) * (0.01 * 255);
constexpr double kC2 = (0.03 * 255) * (0.03 * 255);

void check_same(const Image& a, const Image& b, const char* what) {
  if (a.width != b.width || a.height != b.height)
    throw UsageError(std::string(what) + ": image sizes differ");
  if (a.width < 1 || a.height < 1) throw UsageError(std::string(what) + ": empty image");
}

struct Plane {
  int w = 0, h = 0;
  std::vector<double> v;
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane luma(const Image& img) {
  Plane p{img.width, img.height, std::vector<double>(static_cast<std::size_t>(img.width) * img.height)};
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      p.v[static_cast<std::size_t>(y) * img.width + x] =
          0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
  return p;
}

Plane downsample2(const Plane& p) {
  Plane o{p.w / 2, p.h / 2, {}};
  o.v.resize(static_cast<std::size_t>(o.w) * o.h);
  for (int y = 0; y < o.h; ++y)
    for (int x = 0; x < o.w; ++x)
      o.v[static_cast<std::size_t>(y) * o.w + x] =
          0.25 * (p.at(2 * x, 2 * y) + p.at(2 * x + 1, 2 * y) + p.at(2 * x, 2 * y + 1) + p.at(2 * x + 1, 2 * y + 1));
  return o;
}

// Mean SSIM and mean contrast-structure term over all valid window positions.
std::pair<double, double> ssim_cs(const Plane& a, const Plane& b) {
  const int size = std::min({11, a.w, a.h});
  const double sigma = 1.5 * size / 11.0;
  std::vector<double> g(static_cast<std::size_t>(size));
  double norm = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - (size - 1) / 2.0;
    g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2 * sigma * sigma));
    norm += g[static_cast<std::size_t>(i)];
  }
  for (auto& v : g) v /= norm;
  const int ow = a.w - size + 1, oh = a.h - size + 1;
  double ssim_sum = 0.0, cs_sum = 0.0;
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int j = 0; j < size; ++j)
        for (int i = 0; i < size; ++i) {
          const double wgt = g[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(j)];
          const double va = a.at(x + i, y + j), vb = b.at(x + i, y + j);
          ma += wgt * va;
          mb += wgt * vb;
          saa += wgt * va * va;
          sbb += wgt * vb * vb;
          sab += wgt * (va * vb);
        }
      const double var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
      const double cs = (2 * cov + kC2) / (var_a + var_b + kC2);
      const double lum = (2 * (ma * mb) + kC1) / (ma * ma + mb * mb + kC1);
      ssim_sum += lum * cs;
      cs_sum += cs;
    }
  const double n = static_cast<double>(ow) * oh;
  return {ssim_sum / n, cs_sum / n};
}

}  // namespace

double mse(const Image& a, const Image& b) {
  check_same(a, b, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = static_cast<double>(a.rgb[i]) - b.rgb[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.rgb.size());
}

double psnr(const Image& a, const Image& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / m);
}

std::string format_metric(double value, int precision) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, value);
  return buf;
}

int ms_ssim_scales(int width, int height) {
  const int m = std::min(width, height);
  if (m >= 160) return 5;
  int scales = 1;
  while (scales < 5 && (m >> scales) >= 10) ++scales;
  return scales;
}

double ms_ssim(const Image& a, const Image& b, ScaleMode mode) {
  check_same(a, b, "ms_ssim");
  const int scales = ms_ssim_scales(a.width, a.height);
  if (scales < 5) {
    if (mode == ScaleMode::kStrict)
      throw UsageError("ms_ssim: images smaller than 160 px need fewer than 5 scales");
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true))
      std::cerr << "warning: ms_ssim using " << scales << " scale(s) for " << a.width << "x" << a.height
                << " images\n";
  }
  // The reference exponents are used as-is at full depth.
  double wsum = 1.0;
  if (scales < 5) {
    wsum = 0.0;
    for (int i = 0; i < scales; ++i) wsum += kWeights[static_cast<std::size_t>(i)];
  }
  Plane pa = luma(a), pb = luma(b);
  double score = 1.0;
  for (int i = 0; i < scales; ++i) {
    const auto [ssim, cs] = ssim_cs(pa, pb);
    const double w = kWeights[static_cast<std::size_t>(i)] / wsum;
    // Negative terms are clamped so fractional exponents stay real.
    score *= std::pow(std::max(i == scales - 1 ? ssim : cs, 0.0), w);
    if (i + 1 < scales) {
      pa = downsample2(pa);
      pb = downsample2(pb);
    }
  }
  return score;
}

}  // namespace gcpress
