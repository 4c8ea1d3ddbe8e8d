#pragma once

#include <filesystem>
#include <memory>
#include <utility>
#include <vector>

#include "gcpress/config.hpp"
#include "gcpress/container.hpp"
#include "gcpress/heatmap.hpp"
#include "gcpress/image.hpp"
#include "gcpress/labelmap.hpp"
#include "gcpress/networks.hpp"

namespace gcpress {

/// A loaded model used for inference only. Safe to share across threads.
class CodecSession {
 public:
  CodecSession(TrainConfig cfg, std::shared_ptr<const GanModel<float>> model);
  /// Model directory written by training; checks the weights checksum.
  static CodecSession load(const std::filesystem::path& dir);

  CodecMode mode() const { return net_.semantic ? CodecMode::kSC : CodecMode::kGC; }
  const NetConfig& net() const { return net_; }
  const TrainConfig& config() const { return cfg_; }
  const GanModel<float>& model() const { return *model_; }
  /// Code cells per side for an image side (before padding).
  int code_size(int pixels) const { return (pixels + net_.downsample - 1) / net_.downsample; }

  /// Hard symbols of E(x) over the container's code grid.
  CodeGrid encode_symbols(const Image& image) const;

  CompressedImage compress(const Image& image) const;
  /// SC: only code positions with keep == 1 are transmitted; the rest decode
  /// to the zero center.
  CompressedImage compress(const Image& image, const PolygonLabelMap& labels, const Heatmap& keep) const;

  /// Throws UsageError when the container does not fit this session.
  CodeGrid decode_symbols(const CompressedImage& ci) const;
  Image decompress(const CompressedImage& ci) const;

  /// G on a code grid covering a width x height image. `labels` is required
  /// exactly in SC mode.
  Image render(const CodeGrid& code, int width, int height, const PolygonLabelMap* labels = nullptr) const;

 private:
  TrainConfig cfg_;
  NetConfig net_;
  std::shared_ptr<const GanModel<float>> model_;
};

/// Heatmap keeping the code cells covered (majority rule) by the listed
/// (class, instance) pairs.
Heatmap preserve_heatmap(const PolygonLabelMap& labels, int width, int height, int block,
                         const std::vector<std::pair<int, int>>& preserve);

/// Packs a GC code grid for a width x height image into a container.
CompressedImage pack_code(const CodeGrid& code, int width, int height, int downsample);

struct BppReport {
  double payload_bpp = 0;
  double total_bpp = 0;
  double bound_bpp = 0;    // coded symbols * log2 L / pixels
  double savings = 0;      // 1 - payload / bound
  double header_bpp = 0;   // fixed header, tables and length fields
  double heatmap_bpp = 0;
  double labelmap_bpp = 0;
  double preserved = 1.0;  // fraction of code positions transmitted
  double full_bound_bpp = 0;  // bound if every position were transmitted
};

/// Bit accounting of a container (as returned by write_container or read_container).
BppReport measure_bpp(const CompressedImage& ci);

}  // namespace gcpress
