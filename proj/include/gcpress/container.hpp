#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gcpress/entropy.hpp"
#include "gcpress/heatmap.hpp"
#include "gcpress/quantizer.hpp"

namespace gcpress {

enum class CodecMode : std::uint8_t { kGC = 0, kSC = 1 };

/// In-memory form of a ".gcx" file.
///
/// Layout (little-endian):
///   "GCX1" | version u8 | mode u8 | W u16 | H u16 | C u8 | L u8 | s u8 |
///   centers L x f32 | tables C x L x u32 |
///   [SC only: heatmap len u32 + bytes | labelmap len u32 + bytes] |
///   payload len u32 | payload
struct CompressedImage {
  static constexpr std::uint8_t kVersion = 1;

  CodecMode mode = CodecMode::kGC;
  int width = 0;   // true image size, before padding
  int height = 0;
  int channels = 0;
  int levels = 0;
  int downsample = 16;
  std::vector<float> centers;
  std::vector<FrequencyTable> tables;
  std::optional<std::vector<std::uint8_t>> heatmap_section;
  std::optional<std::vector<std::uint8_t>> labelmap_section;
  std::vector<std::uint8_t> payload;

  // Accounting, filled by write_container/read_container.
  std::size_t header_bits = 0;   // everything except the payload bytes
  std::size_t payload_bits = 0;

  int code_height() const { return (height + downsample - 1) / downsample; }
  int code_width() const { return (width + downsample - 1) / downsample; }
  std::size_t heatmap_bits() const { return heatmap_section ? heatmap_section->size() * 8 : 0; }
  std::size_t labelmap_bits() const { return labelmap_section ? labelmap_section->size() * 8 : 0; }

  /// Throws CorruptionError (or UnsupportedSizeError for oversized frames).
  void validate() const;
};

std::vector<std::uint8_t> write_container(CompressedImage& ci);
CompressedImage read_container(std::span<const std::uint8_t> bytes);

/// Serialized header size for the given geometry (no SC sections, empty payload).
std::size_t gc_header_bytes(int channels, int levels);

/// Channels coded one after another, symbols in raster order, each channel
/// with its own table. When `keep` is given, only positions with keep == 1
/// are coded (in every channel).
std::vector<std::uint8_t> encode_code_payload(const CodeGrid& code, const std::vector<FrequencyTable>& tables,
                                              const Heatmap* keep = nullptr);
/// Inverse of encode_code_payload; skipped positions get `fill_symbol`.
CodeGrid decode_code_payload(std::span<const std::uint8_t> payload, int height, int width, int channels,
                             const CenterSet& centers, const std::vector<FrequencyTable>& tables,
                             const Heatmap* keep = nullptr, int fill_symbol = 0);

}  // namespace gcpress
