#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace gcpress {

/// Binary preservation mask at code resolution: 1 keeps the code entries
/// at that position, 0 leaves them to be synthesized.
struct Heatmap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> cells;

  Heatmap() = default;
  Heatmap(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), cells(static_cast<std::size_t>(h) * w, fill) {}

  std::uint8_t& at(int y, int x) { return cells[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return cells[static_cast<std::size_t>(y) * width + x]; }
  std::size_t preserved() const;
  double preserved_fraction() const;
  bool operator==(const Heatmap&) const = default;
};

/// Raster-scan run lengths, arithmetic-coded with two inline tables
/// (one per run value).
std::vector<std::uint8_t> encode_heatmap(const Heatmap& map);
Heatmap decode_heatmap(std::span<const std::uint8_t> bytes, int height, int width);

/// Code-resolution heatmap from a pixel mask: a cell is preserved iff at
/// least half of its block x block pixels are. The mask may be smaller than
/// the covered area; missing pixels count as not preserved.
Heatmap heatmap_from_pixel_mask(std::span<const std::uint8_t> mask, int width, int height, int block);

}  // namespace gcpress
