#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gcpress/tensor.hpp"

namespace gcpress {

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

/// "GCW1" weight file: magic, version byte, then per parameter in
/// declaration order: u16 name length, name bytes, u8 rank, u32 extents,
/// little-endian f32 values.
std::vector<std::uint8_t> serialize_weights(const std::vector<NamedParameter>& params);

/// Copies stored values into `params`; names, order and shapes must match.
void deserialize_weights(std::span<const std::uint8_t> bytes, const std::vector<NamedParameter>& params);

void save_weights(const std::filesystem::path& path, const std::vector<NamedParameter>& params);
void load_weights(const std::filesystem::path& path, const std::vector<NamedParameter>& params);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace gcpress
