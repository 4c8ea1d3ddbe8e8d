#include "gcpress/container.hpp"

#include <cmath>

#include "gcpress/byteio.hpp"

namespace gcpress {

namespace {
constexpr char kMagic[4] = {'G', 'C', 'X', '1'};
}

void CompressedImage::validate() const {
  if (width < 1 || height < 1) throw CorruptionError("container: empty image");
  if (width > 0xffff || height > 0xffff) throw UnsupportedSizeError("container: dimensions exceed 65535");
  if (channels < 1 || channels > 255) throw CorruptionError("container: invalid channel count");
  if (levels < 2 || levels > 255) throw CorruptionError("container: invalid level count");
  if (downsample < 1 || downsample > 255) throw CorruptionError("container: invalid downsample factor");
  if (centers.size() != static_cast<std::size_t>(levels)) throw CorruptionError("container: center count mismatch");
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (!std::isfinite(centers[i])) throw CorruptionError("container: non-finite center");
    if (i > 0 && !(centers[i - 1] < centers[i])) throw CorruptionError("container: centers not increasing");
  }
  if (tables.size() != static_cast<std::size_t>(channels)) throw CorruptionError("container: table count mismatch");
  for (const auto& t : tables) {
    if (t.size() != levels) throw CorruptionError("container: table size mismatch");
    for (int s = 0; s < levels; ++s)
      if (t.count(s) == 0) throw CorruptionError("container: zero frequency in symbol table");
    if (t.total() > FrequencyTable::kMaxTotal) throw CorruptionError("container: table total too large");
  }
  if (mode == CodecMode::kSC) {
    if (!heatmap_section || heatmap_section->empty()) throw CorruptionError("container: SC mode without heatmap");
    if (!labelmap_section) throw CorruptionError("container: SC mode without label map section");
  } else if (mode == CodecMode::kGC) {
    if (heatmap_section || labelmap_section) throw CorruptionError("container: GC mode with SC sections");
  } else {
    throw CorruptionError("container: unknown mode");
  }
}

std::vector<std::uint8_t> write_container(CompressedImage& ci) {
  if (ci.width > 0xffff || ci.height > 0xffff) throw UnsupportedSizeError("container: dimensions exceed 65535");
  try {
    ci.validate();
  } catch (const CorruptionError& e) {
    throw UsageError(std::string("write_container: ") + e.what());
  }
  ByteWriter out;
  for (char c : kMagic) out.u8(static_cast<std::uint8_t>(c));
  out.u8(CompressedImage::kVersion);
  out.u8(static_cast<std::uint8_t>(ci.mode));
  out.u16(static_cast<std::uint16_t>(ci.width));
  out.u16(static_cast<std::uint16_t>(ci.height));
  out.u8(static_cast<std::uint8_t>(ci.channels));
  out.u8(static_cast<std::uint8_t>(ci.levels));
  out.u8(static_cast<std::uint8_t>(ci.downsample));
  for (float c : ci.centers) out.f32(c);
  for (const auto& t : ci.tables)
    for (int s = 0; s < ci.levels; ++s) out.u32(t.count(s));
  if (ci.mode == CodecMode::kSC) {
    out.u32(static_cast<std::uint32_t>(ci.heatmap_section->size()));
    out.raw(*ci.heatmap_section);
    out.u32(static_cast<std::uint32_t>(ci.labelmap_section->size()));
    out.raw(*ci.labelmap_section);
  }
  out.u32(static_cast<std::uint32_t>(ci.payload.size()));
  out.raw(ci.payload);
  ci.payload_bits = ci.payload.size() * 8;
  ci.header_bits = out.size() * 8 - ci.payload_bits;
  return out.take();
}

CompressedImage read_container(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, "container");
  for (char c : kMagic)
    if (in.u8() != static_cast<std::uint8_t>(c)) throw FormatError("container: not a GCX1 file");
  if (const auto v = in.u8(); v != CompressedImage::kVersion)
    throw UnsupportedVersionError("container: unsupported version " + std::to_string(v));
  CompressedImage ci;
  const auto mode = in.u8();
  if (mode > 1) throw CorruptionError("container: unknown mode " + std::to_string(mode));
  ci.mode = static_cast<CodecMode>(mode);
  ci.width = in.u16();
  ci.height = in.u16();
  ci.channels = in.u8();
  ci.levels = in.u8();
  ci.downsample = in.u8();
  if (ci.levels < 2 || ci.channels < 1) throw CorruptionError("container: invalid code geometry");
  for (int i = 0; i < ci.levels; ++i) ci.centers.push_back(in.f32());
  for (int c = 0; c < ci.channels; ++c) {
    std::vector<std::uint32_t> counts(static_cast<std::size_t>(ci.levels));
    std::uint64_t total = 0;
    for (auto& n : counts) {
      n = in.u32();
      total += n;
    }
    if (total == 0 || total > FrequencyTable::kMaxTotal) throw CorruptionError("container: invalid table total");
    ci.tables.emplace_back(std::move(counts));
  }
  if (ci.mode == CodecMode::kSC) {
    const auto hlen = in.u32();
    const auto h = in.raw(hlen);
    ci.heatmap_section.emplace(h.begin(), h.end());
    const auto llen = in.u32();
    const auto l = in.raw(llen);
    ci.labelmap_section.emplace(l.begin(), l.end());
  }
  const auto plen = in.u32();
  const auto p = in.raw(plen);
  ci.payload.assign(p.begin(), p.end());
  if (!in.at_end()) throw CorruptionError("container: trailing bytes");
  ci.validate();
  ci.payload_bits = ci.payload.size() * 8;
  ci.header_bits = bytes.size() * 8 - ci.payload_bits;
  return ci;
}

std::size_t gc_header_bytes(int channels, int levels) {
  return 4 + 1 + 1 + 2 + 2 + 1 + 1 + 1 + 4 * static_cast<std::size_t>(levels) +
         4 * static_cast<std::size_t>(channels) * levels + 4;
}

std::vector<std::uint8_t> encode_code_payload(const CodeGrid& code, const std::vector<FrequencyTable>& tables,
                                              const Heatmap* keep) {
  if (tables.size() != static_cast<std::size_t>(code.channels)) throw UsageError("payload: table count mismatch");
  if (keep && (keep->height != code.height || keep->width != code.width))
    throw UsageError("payload: heatmap does not match code dimensions");
  BitWriter bits;
  std::vector<std::uint8_t> stream;
  for (int c = 0; c < code.channels; ++c) {
    const auto ch = code.channel(c);
    stream.clear();
    for (std::size_t i = 0; i < ch.size(); ++i)
      if (!keep || keep->cells[i]) stream.push_back(ch[i]);
    ac_encode(stream, tables[static_cast<std::size_t>(c)], bits);
  }
  return bits.take();
}

CodeGrid decode_code_payload(std::span<const std::uint8_t> payload, int height, int width, int channels,
                             const CenterSet& centers, const std::vector<FrequencyTable>& tables, const Heatmap* keep,
                             int fill_symbol) {
  if (tables.size() != static_cast<std::size_t>(channels)) throw UsageError("payload: table count mismatch");
  if (keep && (keep->height != height || keep->width != width))
    throw CorruptionError("payload: heatmap does not match code dimensions");
  CodeGrid code(height, width, channels, centers);
  const std::size_t positions = code.positions();
  const std::size_t kept = keep ? keep->preserved() : positions;
  BitReader bits(payload);
  for (int c = 0; c < channels; ++c) {
    const auto symbols = ac_decode(bits, kept, tables[static_cast<std::size_t>(c)]);
    std::size_t k = 0;
    for (std::size_t i = 0; i < positions; ++i) {
      std::uint8_t s = static_cast<std::uint8_t>(fill_symbol);
      if (!keep || keep->cells[i]) s = symbols[k++];
      code.symbols[static_cast<std::size_t>(c) * positions + i] = s;
    }
  }
  if ((bits.position() + 7) / 8 != payload.size()) throw CorruptionError("payload: length mismatch");
  return code;
}

}  // namespace gcpress
