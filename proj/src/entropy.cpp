#include "gcpress/entropy.hpp"

#include <algorithm>
#include <cmath>

namespace gcpress {

namespace {

constexpr int kCodeBits = 32;
constexpr std::uint64_t kTop = (1ull << kCodeBits) - 1;
constexpr std::uint64_t kHalf = 1ull << (kCodeBits - 1);
constexpr std::uint64_t kQuarter = 1ull << (kCodeBits - 2);
// The decoder reads kCodeBits ahead while the encoder's termination only
// fixes two bits, so a finished decoder sits this far past its stream end.
constexpr std::size_t kLookahead = kCodeBits - 2;

}  // namespace

FrequencyTable::FrequencyTable(std::vector<std::uint32_t> counts) : counts_(std::move(counts)) {
  if (counts_.empty()) throw UsageError("frequency table: no symbols");
  std::uint64_t total = 0;
  for (auto c : counts_) total += c;
  if (total == 0) throw UsageError("frequency table: all counts are zero");
  if (total > kMaxTotal) {
    const std::uint64_t target = kMaxTotal - counts_.size();
    for (auto& c : counts_) {
      if (c == 0) continue;
      c = static_cast<std::uint32_t>(std::max<std::uint64_t>(1, static_cast<std::uint64_t>(c) * target / total));
    }
  }
  cumulative_.assign(counts_.size() + 1, 0);
  for (std::size_t i = 0; i < counts_.size(); ++i) cumulative_[i + 1] = cumulative_[i] + counts_[i];
}

FrequencyTable FrequencyTable::uniform(int symbols) {
  return FrequencyTable(std::vector<std::uint32_t>(static_cast<std::size_t>(symbols), 1));
}

int FrequencyTable::find(std::uint32_t target) const {
  // First cumulative entry strictly greater than target, minus one.
  const auto it = std::upper_bound(cumulative_.begin() + 1, cumulative_.end(), target);
  return static_cast<int>(it - cumulative_.begin()) - 1;
}

double FrequencyTable::cross_entropy_bits(std::span<const std::uint8_t> symbols) const {
  double bits = 0.0;
  const double t = total();
  for (auto s : symbols) bits -= std::log2(count(s) / t);
  return bits;
}

FrequencyTable build_frequency_table(std::span<const std::uint8_t> symbols, int levels) {
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(levels), 1);
  for (auto s : symbols) {
    if (s >= levels) throw UsageError("frequency table: symbol out of range");
    ++counts[s];
  }
  return FrequencyTable(std::move(counts));
}

std::vector<FrequencyTable> build_frequency_tables(const CodeGrid& code) {
  std::vector<FrequencyTable> tables;
  tables.reserve(static_cast<std::size_t>(code.channels));
  for (int c = 0; c < code.channels; ++c) tables.push_back(build_frequency_table(code.channel(c), code.centers.size()));
  return tables;
}

void ArithmeticEncoder::emit(bool bit) {
  out_->put(bit);
  for (; pending_ > 0; --pending_) out_->put(!bit);
}

void ArithmeticEncoder::encode_range(std::uint32_t lo, std::uint32_t hi, std::uint32_t total) {
  if (finished_) throw UsageError("arithmetic encoder: encode after finish");
  const std::uint64_t range = high_ - low_ + 1;
  high_ = low_ + range * hi / total - 1;
  low_ = low_ + range * lo / total;
  for (;;) {
    if (high_ < kHalf) {
      emit(false);
    } else if (low_ >= kHalf) {
      emit(true);
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kHalf + kQuarter) {
      ++pending_;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ = (low_ << 1) & kTop;
    high_ = ((high_ << 1) | 1) & kTop;
  }
}

void ArithmeticEncoder::encode(int symbol, const FrequencyTable& table) {
  if (symbol < 0 || symbol >= table.size() || table.count(symbol) == 0)
    throw UsageError("arithmetic encoder: symbol " + std::to_string(symbol) + " not codable with this table");
  encode_range(table.low(symbol), table.high(symbol), table.total());
}

void ArithmeticEncoder::encode_uniform(std::uint32_t value, int bits) {
  if (bits < 0 || bits > 16) throw UsageError("arithmetic encoder: uniform width must be <= 16 bits");
  if (bits == 0) return;
  encode_range(value, value + 1, 1u << bits);
}

void ArithmeticEncoder::finish() {
  if (finished_) return;
  ++pending_;
  emit(low_ >= kQuarter);
  finished_ = true;
}

ArithmeticDecoder::ArithmeticDecoder(BitReader& in) : in_(&in) {
  for (int i = 0; i < kCodeBits; ++i) value_ = (value_ << 1) | (in_->get() ? 1u : 0u);
}

void ArithmeticDecoder::consume(std::uint32_t lo, std::uint32_t hi, std::uint32_t total) {
  const std::uint64_t range = high_ - low_ + 1;
  high_ = low_ + range * hi / total - 1;
  low_ = low_ + range * lo / total;
  for (;;) {
    if (high_ < kHalf) {
    } else if (low_ >= kHalf) {
      low_ -= kHalf;
      high_ -= kHalf;
      value_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kHalf + kQuarter) {
      low_ -= kQuarter;
      high_ -= kQuarter;
      value_ -= kQuarter;
    } else {
      break;
    }
    low_ = (low_ << 1) & kTop;
    high_ = ((high_ << 1) | 1) & kTop;
    value_ = ((value_ << 1) | (in_->get() ? 1u : 0u)) & kTop;
  }
}

int ArithmeticDecoder::decode(const FrequencyTable& table) {
  const std::uint64_t range = high_ - low_ + 1;
  if (value_ < low_ || value_ > high_) throw CorruptionError("arithmetic decoder: inconsistent stream");
  const std::uint64_t target = ((value_ - low_ + 1) * table.total() - 1) / range;
  if (target >= table.total()) throw CorruptionError("arithmetic decoder: inconsistent stream");
  const int s = table.find(static_cast<std::uint32_t>(target));
  consume(table.low(s), table.high(s), table.total());
  return s;
}

std::uint32_t ArithmeticDecoder::decode_uniform(int bits) {
  if (bits < 0 || bits > 16) throw UsageError("arithmetic decoder: uniform width must be <= 16 bits");
  if (bits == 0) return 0;
  const std::uint32_t total = 1u << bits;
  const std::uint64_t range = high_ - low_ + 1;
  if (value_ < low_ || value_ > high_) throw CorruptionError("arithmetic decoder: inconsistent stream");
  const auto target = static_cast<std::uint32_t>(((value_ - low_ + 1) * total - 1) / range);
  consume(target, target + 1, total);
  return target;
}

void ArithmeticDecoder::finish() {
  const std::size_t end = in_->position() - kLookahead;
  if (end > in_->limit()) throw CorruptionError("arithmetic decoder: stream truncated");
  in_->seek(end);
}

std::size_t ac_encode(std::span<const std::uint8_t> symbols, const FrequencyTable& table, BitWriter& out) {
  ArithmeticEncoder enc(out);
  for (auto s : symbols) enc.encode(s, table);
  enc.finish();
  return enc.bits_written();
}

std::vector<std::uint8_t> ac_decode(BitReader& in, std::size_t n, const FrequencyTable& table) {
  ArithmeticDecoder dec(in);
  std::vector<std::uint8_t> out(n);
  for (auto& s : out) s = static_cast<std::uint8_t>(dec.decode(table));
  dec.finish();
  return out;
}

double bpp_upper_bound(int channels, int levels, int downsample) {
  if (channels < 1 || levels < 2 || downsample < 1) throw UsageError("bpp_upper_bound: invalid geometry");
  return channels * std::log2(static_cast<double>(levels)) / (static_cast<double>(downsample) * downsample);
}

}  // namespace gcpress
