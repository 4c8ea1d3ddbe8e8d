#include "gcpress/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

namespace gcpress {

namespace {

struct Look {
  double r, g, b;
  double freq, phase, angle;  // texture parameters
};

GridPoint clamp_point(double x, double y, int w, int h) {
  return {std::clamp(static_cast<int>(std::lround(x)), 0, w), std::clamp(static_cast<int>(std::lround(y)), 0, h)};
}

std::vector<GridPoint> make_shape(int cls, int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double s = std::min(w, h);
  const double cx = u(rng) * w, cy = u(rng) * h;
  std::vector<GridPoint> poly;
  switch (cls) {
    case kCircle: {
      const double r = (0.1 + 0.2 * u(rng)) * s;
      const int n = 16 + static_cast<int>(rng() % 17);
      for (int i = 0; i < n; ++i) {
        const double t = 2 * std::numbers::pi * i / n;
        poly.push_back(clamp_point(cx + r * std::cos(t), cy + r * std::sin(t), w, h));
      }
      break;
    }
    case kRectangle: {
      const double hw = (0.1 + 0.25 * u(rng)) * w, hh = (0.1 + 0.25 * u(rng)) * h;
      for (auto [dx, dy] : {std::pair{-1, -1}, {1, -1}, {1, 1}, {-1, 1}})
        poly.push_back(clamp_point(cx + dx * hw, cy + dy * hh, w, h));
      break;
    }
    case kTriangle: {
      const double r = (0.15 + 0.25 * u(rng)) * s;
      const double t0 = 2 * std::numbers::pi * u(rng);
      for (int i = 0; i < 3; ++i) {
        const double t = t0 + 2 * std::numbers::pi * i / 3 + 0.4 * (u(rng) - 0.5);
        poly.push_back(clamp_point(cx + r * std::cos(t), cy + r * std::sin(t), w, h));
      }
      break;
    }
    default: {  // stripe: a band across the frame
      const double t = std::numbers::pi * u(rng);
      const double len = 2.0 * std::max(w, h), half = (0.06 + 0.1 * u(rng)) * s;
      const double dx = std::cos(t), dy = std::sin(t), nx = -dy, ny = dx;
      for (auto [a, b] : {std::pair{-1, -1}, {1, -1}, {1, 1}, {-1, 1}})
        poly.push_back(clamp_point(cx + a * len * dx + b * half * nx, cy + a * len * dy + b * half * ny, w, h));
      break;
    }
  }
  return poly;
}

double area(const std::vector<GridPoint>& poly) {
  long long twice = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    twice += static_cast<long long>(a.x) * b.y - static_cast<long long>(b.x) * a.y;
  }
  return std::abs(static_cast<double>(twice)) / 2.0;
}

double texture(int cls, const Look& look, double x, double y) {
  const double along = x * std::cos(look.angle) + y * std::sin(look.angle);
  switch (cls) {
    case kBackground: return 0.12 * std::sin(look.freq * along + look.phase) + 0.1 * (y / 64.0 - 0.5);
    case kCircle: return 0.15 * std::cos(look.freq * 0.5 * std::hypot(x - 32, y - 32) + look.phase);
    case kRectangle: return ((static_cast<int>(std::floor(x / 3)) + static_cast<int>(std::floor(y / 3))) % 2) ? 0.1 : -0.1;
    case kTriangle: return 0.05 * std::sin(look.freq * 2 * along);
    default: return 0.35 * std::sin(look.freq * 3 * along + look.phase);
  }
}

}  // namespace

Sample synthetic_sample(int width, int height, std::uint64_t seed, int min_objects, int max_objects) {
  if (width < 1 || height < 1) throw UsageError("synthetic sample: empty size");
  if (min_objects < 0 || max_objects < min_objects) throw UsageError("synthetic sample: bad object count range");
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Each class has a characteristic color; instances jitter around it.
  static constexpr double kPalette[kSyntheticClasses][3] = {
      {0.50, 0.55, 0.60}, {0.80, 0.35, 0.25}, {0.25, 0.40, 0.75}, {0.35, 0.70, 0.30}, {0.75, 0.70, 0.30}};
  auto look = [&](int cls) {
    const auto& p = kPalette[cls];
    auto jitter = [&](double v) { return v + 0.24 * (u(rng) - 0.5); };
    return Look{jitter(p[0]), jitter(p[1]), jitter(p[2]), 0.2 + 0.6 * u(rng), 2 * std::numbers::pi * u(rng),
                std::numbers::pi * u(rng)};
  };
  PolygonLabelMap map;
  std::map<int, std::pair<int, Look>> looks;  // instance -> (class, look)
  map.objects.push_back({kBackground, 0, {{0, 0}, {width, 0}, {width, height}, {0, height}}});
  looks[0] = {kBackground, look(kBackground)};
  const int n = min_objects + static_cast<int>(rng() % static_cast<std::uint64_t>(max_objects - min_objects + 1));
  for (int i = 1; i <= n; ++i) {
    const int cls = 1 + static_cast<int>(rng() % 4);
    // Shapes clipped to a sliver are redrawn.
    std::vector<GridPoint> poly = make_shape(cls, width, height, rng);
    for (int tries = 0; tries < 16 && area(poly) < 4.0; ++tries) poly = make_shape(cls, width, height, rng);
    map.objects.push_back({cls, i, std::move(poly)});
    looks[i] = {cls, look(cls)};
  }
  const LabelGrids grids = rasterize_label_map(map, width, height);
  std::normal_distribution<double> noise(0.0, 0.015);
  Sample s;
  s.name = "synthetic_" + std::to_string(seed);
  s.image = Image(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const auto& [cls, lk] = looks.at(grids.instance_at(x, y));
      const double t = texture(cls, lk, x, y);
      const double base[3] = {lk.r, lk.g, lk.b};
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(base[c] + t + noise(rng), 0.0, 1.0);
        s.image.at(x, y, c) = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  s.labels = std::move(map);
  return s;
}

Dataset synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.count < 1) throw UsageError("synthetic corpus: count must be positive");
  Dataset out;
  for (int i = 0; i < spec.count; ++i)
    out.push_back(synthetic_sample(spec.width, spec.height, spec.seed * 1000003ull + static_cast<std::uint64_t>(i),
                                   spec.min_objects, spec.max_objects));
  return out;
}

RescalePlan plan_rescale(int width, int height, int long_side) {
  if (width < 1 || height < 1 || long_side < 1) throw UsageError("rescale: empty size");
  const int longest = std::max(width, height);
  RescalePlan p;
  p.downscale = static_cast<double>(longest) / long_side;
  if (width >= height) {
    p.width = long_side;
    p.height = std::max(1, static_cast<int>(std::lround(height / p.downscale)));
  } else {
    p.height = long_side;
    p.width = std::max(1, static_cast<int>(std::lround(width / p.downscale)));
  }
  return p;
}

Dataset ingest_folder(const FolderSpec& spec, IngestReport* report) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(spec.dir)) throw UsageError("not a directory: " + spec.dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(spec.dir)) {
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (e.is_regular_file() && ext == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  IngestReport rep;
  Dataset out;
  std::mt19937_64 rng(spec.seed);
  for (const auto& f : files) {
    Image img;
    try {
      img = read_png(f);
    } catch (const Error&) {
      ++rep.unreadable;
      continue;
    }
    const RescalePlan plan = plan_rescale(img.width, img.height, spec.rescale_long_side);
    if (plan.downscale < spec.min_downscale) {
      ++rep.too_small;
      continue;
    }
    Image scaled = resize_area(img, plan.width, plan.height);
    const HsvMeans hsv = mean_hsv(scaled);
    if (hsv.saturation > spec.max_saturation || hsv.value > spec.max_value) {
      ++rep.too_saturated;
      continue;
    }
    if (spec.crop > 0) {
      if (scaled.width < spec.crop || scaled.height < spec.crop) {
        ++rep.too_small;
        continue;
      }
      const int x0 = static_cast<int>(rng() % static_cast<std::uint64_t>(scaled.width - spec.crop + 1));
      const int y0 = static_cast<int>(rng() % static_cast<std::uint64_t>(scaled.height - spec.crop + 1));
      scaled = crop(scaled, x0, y0, spec.crop, spec.crop);
    }
    ++rep.accepted;
    out.push_back({f.filename().string(), std::move(scaled), std::nullopt});
  }
  if (report) *report = rep;
  if (out.empty())
    throw UsageError("no usable images in " + spec.dir.string() + " (" + std::to_string(files.size()) +
                     " PNG files; discarded: " + std::to_string(rep.too_small) + " too small, " +
                     std::to_string(rep.too_saturated) + " too saturated/bright, " + std::to_string(rep.unreadable) +
                     " unreadable)");
  return out;
}

}  // namespace gcpress
