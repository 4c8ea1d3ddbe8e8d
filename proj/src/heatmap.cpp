#include "gcpress/heatmap.hpp"

#include <algorithm>

#include "gcpress/int_coding.hpp"

namespace gcpress {

std::size_t Heatmap::preserved() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

double Heatmap::preserved_fraction() const {
  return cells.empty() ? 0.0 : static_cast<double>(preserved()) / static_cast<double>(cells.size());
}

std::vector<std::uint8_t> encode_heatmap(const Heatmap& map) {
  if (map.cells.size() != static_cast<std::size_t>(map.height) * map.width)
    throw UsageError("heatmap: cell count does not match dimensions");
  for (auto c : map.cells)
    if (c > 1) throw UsageError("heatmap: values must be 0 or 1");
  ByteWriter out;
  if (map.cells.empty()) {
    out.u8(0);
    out.varint(0);
    return out.take();
  }
  std::vector<std::uint64_t> runs;
  std::uint64_t run = 1;
  for (std::size_t i = 1; i < map.cells.size(); ++i) {
    if (map.cells[i] == map.cells[i - 1]) {
      ++run;
    } else {
      runs.push_back(run);
      run = 1;
    }
  }
  runs.push_back(run);
  out.u8(map.cells[0]);
  out.varint(runs.size());
  if (runs.size() == 1) return out.take();
  // The final run is implied by the frame size.
  std::vector<std::uint64_t> even, odd;
  for (std::size_t i = 0; i + 1 < runs.size(); ++i) (i % 2 == 0 ? even : odd).push_back(runs[i] - 1);
  const FrequencyTable even_table = intcode::bucket_table(even);
  const FrequencyTable odd_table = intcode::bucket_table(odd);
  intcode::write_sparse_table(out, even_table);
  intcode::write_sparse_table(out, odd_table);
  BitWriter bits;
  ArithmeticEncoder enc(bits);
  for (std::size_t i = 0; i + 1 < runs.size(); ++i)
    intcode::encode(enc, runs[i] - 1, i % 2 == 0 ? even_table : odd_table);
  enc.finish();
  out.raw(bits.bytes());
  return out.take();
}

Heatmap decode_heatmap(std::span<const std::uint8_t> bytes, int height, int width) {
  if (height < 0 || width < 0) throw UsageError("heatmap: negative dimensions");
  ByteReader in(bytes, "heatmap");
  Heatmap map(height, width);
  const std::uint8_t first = in.u8();
  if (first > 1) throw CorruptionError("heatmap: invalid first value");
  const std::uint64_t nruns = in.varint();
  const std::uint64_t cells = map.cells.size();
  if (cells == 0) {
    if (nruns != 0 || !in.at_end()) throw CorruptionError("heatmap: data for empty frame");
    return map;
  }
  if (nruns == 0 || nruns > cells) throw CorruptionError("heatmap: invalid run count");
  if (nruns == 1) {
    if (!in.at_end()) throw CorruptionError("heatmap: trailing data");
    std::fill(map.cells.begin(), map.cells.end(), first);
    return map;
  }
  const FrequencyTable even_table = intcode::read_sparse_table(in, intcode::kMaxBucket);
  const FrequencyTable odd_table = intcode::read_sparse_table(in, intcode::kMaxBucket);
  const auto payload = in.rest();
  BitReader bits(payload);
  ArithmeticDecoder dec(bits);
  std::uint64_t pos = 0;
  std::uint8_t value = first;
  for (std::uint64_t i = 0; i + 1 < nruns; ++i) {
    const std::uint64_t run = intcode::decode(dec, i % 2 == 0 ? even_table : odd_table) + 1;
    if (pos + run >= cells) throw CorruptionError("heatmap: runs exceed frame");
    std::fill(map.cells.begin() + static_cast<long long>(pos), map.cells.begin() + static_cast<long long>(pos + run),
              value);
    pos += run;
    value ^= 1;
  }
  std::fill(map.cells.begin() + static_cast<long long>(pos), map.cells.end(), value);
  dec.finish();
  if ((bits.position() + 7) / 8 != payload.size()) throw CorruptionError("heatmap: length mismatch");
  return map;
}

Heatmap heatmap_from_pixel_mask(std::span<const std::uint8_t> mask, int width, int height, int block) {
  if (block < 1) throw UsageError("heatmap: block must be >= 1");
  if (mask.size() != static_cast<std::size_t>(width) * height) throw UsageError("heatmap: mask size mismatch");
  const int h = (height + block - 1) / block;
  const int w = (width + block - 1) / block;
  Heatmap map(h, w);
  for (int cy = 0; cy < h; ++cy)
    for (int cx = 0; cx < w; ++cx) {
      int kept = 0;
      for (int y = cy * block; y < std::min(height, (cy + 1) * block); ++y)
        for (int x = cx * block; x < std::min(width, (cx + 1) * block); ++x) kept += mask[static_cast<std::size_t>(y) * width + x] ? 1 : 0;
      map.at(cy, cx) = 2 * kept >= block * block ? 1 : 0;
    }
  return map;
}

}  // namespace gcpress
