#pragma once

#include <string>

#include "gcpress/image.hpp"

namespace gcpress {

/// PSNR on the 0-255 scale over all channels. Identical images give
/// +infinity. Throws UsageError on a size mismatch.
double psnr(const Image& a, const Image& b);
double mse(const Image& a, const Image& b);

/// "inf" for infinite values, otherwise fixed notation.
std::string format_metric(double value, int precision = 4);

enum class ScaleMode { kReduce, kStrict };

/// Number of dyadic scales used for an image of this size: 5 when the short
/// side is at least 160, otherwise the largest count keeping the coarsest
/// scale at 10 px or more (at least 1).
int ms_ssim_scales(int width, int height);

/// Multi-scale SSIM on BT.601 luma with the standard 5-scale exponents and an
/// 11x11 Gaussian window (sigma 1.5). Small images use fewer scales with the
/// leading exponents renormalized, warning once on stderr; kStrict throws
/// UsageError instead.
double ms_ssim(const Image& a, const Image& b, ScaleMode mode = ScaleMode::kReduce);

}  // namespace gcpress
