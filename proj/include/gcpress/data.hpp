#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gcpress/image.hpp"
#include "gcpress/labelmap.hpp"

namespace gcpress {

struct Sample {
  std::string name;
  Image image;
  std::optional<PolygonLabelMap> labels;
};

using Dataset = std::vector<Sample>;

// Synthetic corpus classes.
enum SyntheticClass : int { kBackground = 0, kCircle = 1, kRectangle = 2, kTriangle = 3, kStripe = 4 };
constexpr int kSyntheticClasses = 5;

struct SyntheticSpec {
  int width = 64;
  int height = 64;
  int count = 64;
  std::uint64_t seed = 1;
  int min_objects = 2;
  int max_objects = 5;
};

/// A textured background (class 0, instance 0, full frame) with colored
/// polygon instances (ids from 1) drawn from the label map's own raster.
Sample synthetic_sample(int width, int height, std::uint64_t seed, int min_objects = 2, int max_objects = 5);
Dataset synthetic_corpus(const SyntheticSpec& spec);

struct FolderSpec {
  std::filesystem::path dir;
  int rescale_long_side = 768;
  double min_downscale = 1.25;
  double max_saturation = 0.9;
  double max_value = 0.8;
  int crop = 64;  // 0 keeps the whole rescaled image
  std::uint64_t seed = 1;
};

struct IngestReport {
  int accepted = 0;
  int too_small = 0;      // rescaling would not downscale by min_downscale
  int too_saturated = 0;  // mean S or V above the caps
  int unreadable = 0;
};

/// PNG files of `dir` in name order, filtered and cropped. Throws
/// UsageError listing discard counts when nothing survives.
Dataset ingest_folder(const FolderSpec& spec, IngestReport* report = nullptr);

/// Scale factor and size after fitting the long side to `long_side`.
struct RescalePlan {
  int width = 0;
  int height = 0;
  double downscale = 1.0;  // original / rescaled
};
RescalePlan plan_rescale(int width, int height, int long_side);

}  // namespace gcpress
