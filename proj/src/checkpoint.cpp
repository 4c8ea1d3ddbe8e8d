#include "gcpress/checkpoint.hpp"

#include <fstream>
#include <iterator>
#include <zlib.h>

#include "gcpress/byteio.hpp"

namespace gcpress {

namespace {
constexpr char kMagic[4] = {'G', 'C', 'W', '1'};
constexpr std::uint8_t kVersion = 1;
}  // namespace

std::vector<std::uint8_t> serialize_weights(const std::vector<NamedParameter>& params) {
  ByteWriter out;
  for (char c : kMagic) out.u8(static_cast<std::uint8_t>(c));
  out.u8(kVersion);
  for (const auto& p : params) {
    if (p.name.size() > 0xffff) throw UsageError("checkpoint: parameter name too long");
    out.u16(static_cast<std::uint16_t>(p.name.size()));
    out.raw(p.name);
    const auto& shape = p.tensor.shape();
    if (shape.size() > 0xff) throw UsageError("checkpoint: rank too large");
    out.u8(static_cast<std::uint8_t>(shape.size()));
    for (int d : shape) out.u32(static_cast<std::uint32_t>(d));
    for (float v : p.tensor.values()) out.f32(v);
  }
  return out.take();
}

void deserialize_weights(std::span<const std::uint8_t> bytes, const std::vector<NamedParameter>& params) {
  ByteReader in(bytes, "checkpoint");
  for (char c : kMagic)
    if (in.u8() != static_cast<std::uint8_t>(c)) throw FormatError("checkpoint: bad magic");
  if (const auto v = in.u8(); v != kVersion)
    throw UnsupportedVersionError("checkpoint: unsupported version " + std::to_string(v));
  for (const auto& p : params) {
    const std::uint16_t len = in.u16();
    const auto name_bytes = in.raw(len);
    const std::string name(name_bytes.begin(), name_bytes.end());
    if (name != p.name) throw CorruptionError("checkpoint: expected parameter '" + p.name + "', found '" + name + "'");
    const int rank = in.u8();
    Shape shape(static_cast<std::size_t>(rank));
    for (auto& d : shape) d = static_cast<int>(in.u32());
    if (shape != p.tensor.shape())
      throw CorruptionError("checkpoint: parameter '" + name + "' has shape " + shape_to_string(shape) +
                            ", model expects " + shape_to_string(p.tensor.shape()));
    Tensor target = p.tensor;
    auto dst = target.data();
    for (auto& v : dst) v = in.f32();
  }
  if (!in.at_end()) throw CorruptionError("checkpoint: trailing data after last parameter");
}

void save_weights(const std::filesystem::path& path, const std::vector<NamedParameter>& params) {
  write_file_atomic(path, serialize_weights(params));
}

void load_weights(const std::filesystem::path& path, const std::vector<NamedParameter>& params) {
  deserialize_weights(read_file(path), params);
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw UsageError("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace gcpress
