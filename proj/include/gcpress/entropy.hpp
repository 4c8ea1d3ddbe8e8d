#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gcpress/quantizer.hpp"

namespace gcpress {

/// MSB-first bit sink.
class BitWriter {
 public:
  void put(bool bit) {
    if ((bits_ & 7) == 0) bytes_.push_back(0);
    if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ & 7));
    ++bits_;
  }
  std::size_t bits() const { return bits_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bits_ = 0;
};

/// MSB-first bit source. Reads past the end yield zeros and are tracked so
/// decoders can tell legitimate look-ahead from truncation.
class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes), limit_(bytes.size() * 8) {}
  BitReader(std::span<const std::uint8_t> bytes, std::size_t bit_limit)
      : bytes_(bytes), limit_(std::min(bit_limit, bytes.size() * 8)) {}

  bool get() {
    const std::size_t p = pos_++;
    if (p >= limit_) return false;
    return (bytes_[p >> 3] >> (7 - (p & 7))) & 1u;
  }
  std::size_t position() const { return pos_; }
  void seek(std::size_t bit) { pos_ = bit; }
  std::size_t limit() const { return limit_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

/// Static symbol frequencies with cumulative lookup. Zero counts are allowed
/// (those symbols cannot be coded); the total never exceeds kMaxTotal.
class FrequencyTable {
 public:
  static constexpr std::uint32_t kMaxTotal = 1u << 16;

  FrequencyTable() = default;
  /// Counts are rescaled to fit kMaxTotal when needed, keeping every nonzero
  /// count nonzero and ratios within one count.
  explicit FrequencyTable(std::vector<std::uint32_t> counts);
  static FrequencyTable uniform(int symbols);

  int size() const { return static_cast<int>(counts_.size()); }
  std::uint32_t count(int s) const { return counts_[static_cast<std::size_t>(s)]; }
  std::uint32_t low(int s) const { return cumulative_[static_cast<std::size_t>(s)]; }
  std::uint32_t high(int s) const { return cumulative_[static_cast<std::size_t>(s) + 1]; }
  std::uint32_t total() const { return cumulative_.back(); }
  const std::vector<std::uint32_t>& counts() const { return counts_; }
  /// Symbol whose cumulative interval contains `target` (< total()).
  int find(std::uint32_t target) const;
  /// Ideal code length in bits of `symbols` under this table.
  double cross_entropy_bits(std::span<const std::uint8_t> symbols) const;

  bool operator==(const FrequencyTable& o) const { return counts_ == o.counts_; }

 private:
  std::vector<std::uint32_t> counts_;
  std::vector<std::uint32_t> cumulative_{0};
};

/// Per-channel Laplace-smoothed tables: count[j] = 1 + occurrences of j.
std::vector<FrequencyTable> build_frequency_tables(const CodeGrid& code);
/// The same rule for one symbol stream over `levels` symbols.
FrequencyTable build_frequency_table(std::span<const std::uint8_t> symbols, int levels);

/// Binary arithmetic coder with 32-bit registers and carry-less (pending-bit)
/// renormalization. finish() emits two bits plus any pending bits.
class ArithmeticEncoder {
 public:
  explicit ArithmeticEncoder(BitWriter& out) : out_(&out), start_(out.bits()) {}
  void encode(int symbol, const FrequencyTable& table);
  /// `bits` (<= 16) equiprobable bits of `value`.
  void encode_uniform(std::uint32_t value, int bits);
  void finish();
  std::size_t bits_written() const { return out_->bits() - start_; }

 private:
  void encode_range(std::uint32_t lo, std::uint32_t hi, std::uint32_t total);
  void emit(bool bit);

  BitWriter* out_;
  std::size_t start_;
  std::uint64_t low_ = 0;
  std::uint64_t high_ = 0xFFFFFFFFu;
  std::uint64_t pending_ = 0;
  bool finished_ = false;
};

class ArithmeticDecoder {
 public:
  /// Starts decoding at the reader's current position.
  explicit ArithmeticDecoder(BitReader& in);
  int decode(const FrequencyTable& table);
  std::uint32_t decode_uniform(int bits);
  /// Rewinds the reader to the end of this stream so that a following stream
  /// can be decoded; throws CorruptionError if the stream ran past the input.
  void finish();

 private:
  void consume(std::uint32_t lo, std::uint32_t hi, std::uint32_t total);

  BitReader* in_;
  std::uint64_t low_ = 0;
  std::uint64_t high_ = 0xFFFFFFFFu;
  std::uint64_t value_ = 0;
};

/// Encodes a whole stream and terminates it. Returns the number of bits emitted.
std::size_t ac_encode(std::span<const std::uint8_t> symbols, const FrequencyTable& table, BitWriter& out);
/// Decodes exactly `n` symbols and leaves the reader at the end of the stream.
std::vector<std::uint8_t> ac_decode(BitReader& in, std::size_t n, const FrequencyTable& table);

/// C * log2(L) / s^2: bits per pixel of a code with C channels at 1/s
/// resolution when every symbol costs log2(L) bits.
double bpp_upper_bound(int channels, int levels, int downsample);

}  // namespace gcpress
