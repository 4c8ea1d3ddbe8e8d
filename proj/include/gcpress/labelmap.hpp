#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gcpress {

struct GridPoint {
  int x = 0;
  int y = 0;
  bool operator==(const GridPoint&) const = default;
};

/// Semantic label map as closed polygons on the pixel-corner grid
/// (0 <= x <= W, 0 <= y <= H). Later objects paint over earlier ones.
struct PolygonLabelMap {
  struct Object {
    int class_id = 0;
    int instance_id = 0;
    std::vector<GridPoint> polygon;
    bool operator==(const Object&) const = default;
  };
  std::vector<Object> objects;

  bool operator==(const PolygonLabelMap&) const = default;
  /// Throws UsageError on out-of-bounds coordinates, degenerate polygons or negative ids.
  void validate(int width, int height) const;
};

/// One object per line: "class instance x0,y0 x1,y1 ...". Blank lines and
/// lines starting with '#' are skipped.
PolygonLabelMap parse_label_map(const std::string& text);
std::string format_label_map(const PolygonLabelMap& map);

/// Delta-coded, arithmetic-coded polygon stream. Output does not depend on
/// the frame size beyond the bounds check.
std::vector<std::uint8_t> encode_label_map(const PolygonLabelMap& map, int width, int height);
PolygonLabelMap decode_label_map(std::span<const std::uint8_t> bytes, int width, int height);

/// Per-pixel class and instance ids; pixels outside every polygon are 0/0.
struct LabelGrids {
  int width = 0;
  int height = 0;
  std::vector<int> classes;
  std::vector<int> instances;

  int class_at(int x, int y) const { return classes[static_cast<std::size_t>(y) * width + x]; }
  int instance_at(int x, int y) const { return instances[static_cast<std::size_t>(y) * width + x]; }
};

/// Scanline fill sampling pixel centers with the even-odd rule.
LabelGrids rasterize_label_map(const PolygonLabelMap& map, int width, int height);

}  // namespace gcpress
