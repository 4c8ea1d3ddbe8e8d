#include "gcpress/int_coding.hpp"

#include <bit>

namespace gcpress::intcode {

int bucket_of(std::uint64_t v) {
  if (v >= (1ull << kMaxBucket) - 1) throw UsageError("integer coder: value too large");
  return std::bit_width(v + 1) - 1;
}

FrequencyTable bucket_table(std::span<const std::uint64_t> values) {
  std::vector<std::uint32_t> counts(kMaxBucket, 0);
  int top = 0;
  for (auto v : values) {
    const int b = bucket_of(v);
    ++counts[static_cast<std::size_t>(b)];
    top = std::max(top, b);
  }
  counts.resize(static_cast<std::size_t>(top) + 1);
  if (values.empty()) counts[0] = 1;
  return FrequencyTable(std::move(counts));
}

void encode(ArithmeticEncoder& enc, std::uint64_t v, const FrequencyTable& buckets) {
  const int b = bucket_of(v);
  enc.encode(b, buckets);
  std::uint64_t rest = v + 1 - (1ull << b);
  int bits = b;
  while (bits > 0) {
    const int chunk = std::min(bits, 16);
    bits -= chunk;
    enc.encode_uniform(static_cast<std::uint32_t>((rest >> bits) & ((1u << chunk) - 1)), chunk);
  }
}

std::uint64_t decode(ArithmeticDecoder& dec, const FrequencyTable& buckets) {
  const int b = dec.decode(buckets);
  std::uint64_t rest = 0;
  int bits = b;
  while (bits > 0) {
    const int chunk = std::min(bits, 16);
    bits -= chunk;
    rest = (rest << chunk) | dec.decode_uniform(chunk);
  }
  return (1ull << b) - 1 + rest;
}

void write_sparse_table(ByteWriter& out, const FrequencyTable& table) {
  std::uint64_t mask = 0;
  for (int s = 0; s < table.size(); ++s)
    if (table.count(s) > 0) mask |= 1ull << s;
  out.varint(mask);
  for (int s = 0; s < table.size(); ++s)
    if (table.count(s) > 0) out.varint(table.count(s));
}

FrequencyTable read_sparse_table(ByteReader& in, int max_symbols) {
  const std::uint64_t mask = in.varint();
  if (mask == 0 || (max_symbols < 64 && (mask >> max_symbols) != 0))
    throw CorruptionError("integer coder: invalid table mask");
  const int size = std::bit_width(mask);
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(size), 0);
  std::uint64_t total = 0;
  for (int s = 0; s < size; ++s) {
    if ((mask >> s) & 1) {
      const std::uint64_t c = in.varint();
      if (c == 0 || c > FrequencyTable::kMaxTotal) throw CorruptionError("integer coder: invalid table count");
      counts[static_cast<std::size_t>(s)] = static_cast<std::uint32_t>(c);
      total += c;
    }
  }
  if (total > FrequencyTable::kMaxTotal) throw CorruptionError("integer coder: table total too large");
  return FrequencyTable(std::move(counts));
}

}  // namespace gcpress::intcode
