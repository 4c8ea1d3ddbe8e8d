#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gcpress/byteio.hpp"
#include "gcpress/entropy.hpp"

namespace gcpress::intcode {

// Unbounded non-negative integers are coded as an Elias-gamma style bucket
// floor(log2(v + 1)) through a static table, followed by the bucket's
// low-order bits coded as equiprobable.

constexpr int kMaxBucket = 40;

int bucket_of(std::uint64_t v);

/// Bucket histogram of `values`; only buckets that occur get a count.
FrequencyTable bucket_table(std::span<const std::uint64_t> values);

void encode(ArithmeticEncoder& enc, std::uint64_t v, const FrequencyTable& buckets);
std::uint64_t decode(ArithmeticDecoder& dec, const FrequencyTable& buckets);

/// Stores a table as a presence bitmask plus varint counts of present symbols.
void write_sparse_table(ByteWriter& out, const FrequencyTable& table);
FrequencyTable read_sparse_table(ByteReader& in, int max_symbols);

inline std::uint64_t zigzag(std::int64_t v) {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}
inline std::int64_t unzigzag(std::uint64_t v) {
  return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1);
}

}  // namespace gcpress::intcode
