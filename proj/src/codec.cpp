#include "gcpress/codec.hpp"

#include <cmath>
#include <set>

#include "gcpress/autograd.hpp"
#include "gcpress/errors.hpp"
#include "gcpress/model_store.hpp"
#include "gcpress/quantizer.hpp"

namespace gcpress {

namespace {

int round_up(int v, int m) { return (v + m - 1) / m * m; }

int mirror(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  return i < n ? i : period - i;
}

// Same mirroring as reflect_pad, on class ids.
LabelGrids pad_grids(const LabelGrids& g, int width, int height) {
  LabelGrids out;
  out.width = width;
  out.height = height;
  out.classes.resize(static_cast<std::size_t>(width) * height);
  out.instances.resize(out.classes.size());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t src = static_cast<std::size_t>(mirror(y, g.height)) * g.width + mirror(x, g.width);
      out.classes[static_cast<std::size_t>(y) * width + x] = g.classes[src];
      out.instances[static_cast<std::size_t>(y) * width + x] = g.instances[src];
    }
  return out;
}

// Top-left h x w window of every channel.
CodeGrid crop_code(const CodeGrid& code, int h, int w) {
  if (code.height == h && code.width == w) return code;
  CodeGrid out(h, w, code.channels, code.centers);
  for (int c = 0; c < code.channels; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(y, x, c) = code.at(y, x, c);
  return out;
}

CodeGrid extend_code(const CodeGrid& code, int h, int w, std::uint8_t fill) {
  if (code.height == h && code.width == w) return code;
  CodeGrid out(h, w, code.channels, code.centers);
  std::fill(out.symbols.begin(), out.symbols.end(), fill);
  for (int c = 0; c < code.channels; ++c)
    for (int y = 0; y < code.height; ++y)
      for (int x = 0; x < code.width; ++x) out.at(y, x, c) = code.at(y, x, c);
  return out;
}

std::vector<FrequencyTable> kept_tables(const CodeGrid& code, const Heatmap* keep) {
  std::vector<FrequencyTable> tables;
  std::vector<std::uint8_t> stream;
  for (int c = 0; c < code.channels; ++c) {
    const auto ch = code.channel(c);
    stream.clear();
    for (std::size_t i = 0; i < ch.size(); ++i)
      if (!keep || keep->cells[i]) stream.push_back(ch[i]);
    tables.push_back(build_frequency_table(stream, code.centers.size()));
  }
  return tables;
}

}  // namespace

CodecSession::CodecSession(TrainConfig cfg, std::shared_ptr<const GanModel<float>> model)
    : cfg_(std::move(cfg)), net_(cfg_.model_config()), model_(std::move(model)) {
  if (!model_) throw UsageError("codec session without a model");
  if (model_->config().channels != net_.channels || model_->config().semantic != net_.semantic)
    throw UsageError("model does not match its configuration");
}

CodecSession CodecSession::load(const std::filesystem::path& dir) {
  StoredModel stored = load_model_dir(dir);
  return CodecSession(std::move(stored.config), std::shared_ptr<const GanModel<float>>(std::move(stored.model)));
}

CodeGrid CodecSession::encode_symbols(const Image& image) const {
  if (image.width < 1 || image.height < 1) throw UsageError("cannot compress an empty image");
  const int m = net_.image_multiple();
  const Image padded = reflect_pad(image, round_up(image.width, m), round_up(image.height, m));
  NoRecordScope<float> off;
  const CodeGrid full = quantize_hard(model_->encode(image_to_tensor(padded)), net_.centers);
  return crop_code(full, code_size(image.height), code_size(image.width));
}

CompressedImage pack_code(const CodeGrid& code, int width, int height, int downsample) {
  CompressedImage ci;
  ci.mode = CodecMode::kGC;
  ci.width = width;
  ci.height = height;
  ci.channels = code.channels;
  ci.levels = code.centers.size();
  ci.downsample = downsample;
  if (ci.code_height() != code.height || ci.code_width() != code.width)
    throw UsageError("code grid does not cover the image");
  ci.centers = code.centers.values();
  ci.tables = kept_tables(code, nullptr);
  ci.payload = encode_code_payload(code, ci.tables);
  write_container(ci);  // fills the bit accounting
  return ci;
}

CompressedImage CodecSession::compress(const Image& image) const {
  if (mode() != CodecMode::kGC) throw UsageError("SC model: compression needs a label map and a heatmap");
  return pack_code(encode_symbols(image), image.width, image.height, net_.downsample);
}

CompressedImage CodecSession::compress(const Image& image, const PolygonLabelMap& labels, const Heatmap& keep) const {
  if (mode() != CodecMode::kSC) throw UsageError("GC model: label maps and heatmaps are not used");
  labels.validate(image.width, image.height);
  for (const auto& obj : labels.objects)
    if (obj.class_id >= net_.num_classes)
      throw UsageError("label map class " + std::to_string(obj.class_id) + " outside the model's " +
                       std::to_string(net_.num_classes) + " classes");
  if (keep.height != code_size(image.height) || keep.width != code_size(image.width))
    throw UsageError("heatmap must be " + std::to_string(code_size(image.height)) + "x" +
                     std::to_string(code_size(image.width)));
  CodeGrid code = encode_symbols(image);
  const auto zero = static_cast<std::uint8_t>(net_.centers.zero_index());
  for (int c = 0; c < code.channels; ++c)
    for (std::size_t i = 0; i < keep.cells.size(); ++i)
      if (!keep.cells[i]) code.symbols[static_cast<std::size_t>(c) * code.positions() + i] = zero;
  CompressedImage ci;
  ci.mode = CodecMode::kSC;
  ci.width = image.width;
  ci.height = image.height;
  ci.channels = code.channels;
  ci.levels = code.centers.size();
  ci.downsample = net_.downsample;
  ci.centers = code.centers.values();
  ci.tables = kept_tables(code, &keep);
  ci.payload = encode_code_payload(code, ci.tables, &keep);
  ci.heatmap_section = encode_heatmap(keep);
  ci.labelmap_section = encode_label_map(labels, image.width, image.height);
  write_container(ci);
  return ci;
}

CodeGrid CodecSession::decode_symbols(const CompressedImage& ci) const {
  if (ci.mode != mode()) throw UsageError("container mode does not match the model");
  if (ci.channels != net_.channels || ci.levels != net_.centers.size() || ci.downsample != net_.downsample ||
      ci.centers != net_.centers.values())
    throw UsageError("container code geometry (C, L, s, centers) does not match the model");
  if (ci.mode == CodecMode::kGC)
    return decode_code_payload(ci.payload, ci.code_height(), ci.code_width(), ci.channels, net_.centers, ci.tables);
  const Heatmap keep = decode_heatmap(*ci.heatmap_section, ci.code_height(), ci.code_width());
  return decode_code_payload(ci.payload, ci.code_height(), ci.code_width(), ci.channels, net_.centers, ci.tables,
                             &keep, net_.centers.zero_index());
}

Image CodecSession::render(const CodeGrid& code, int width, int height, const PolygonLabelMap* labels) const {
  const int m = net_.image_multiple();
  const int pw = round_up(width, m), ph = round_up(height, m);
  if (code.height != code_size(height) || code.width != code_size(width) || code.channels != net_.channels)
    throw UsageError("code grid does not match the image size");
  Tensor semantics;
  if (net_.semantic) {
    if (!labels) throw UsageError("SC decoding needs the label map");
    const LabelGrids grids = pad_grids(rasterize_label_map(*labels, width, height), pw, ph);
    semantics = one_hot<float>(grids, net_.num_classes);
  }
  // Code cells beyond the true size only ever cover padding.
  const CodeGrid full = extend_code(code, ph / net_.downsample, pw / net_.downsample,
                                    static_cast<std::uint8_t>(std::max(net_.centers.zero_index(), 0)));
  NoRecordScope<float> off;
  Tensor noise;
  if (net_.use_noise) noise = noise_grid(net_.noise_dim, full.height, full.width, 0);
  return tensor_to_image(model_->generate(dequantize(full), semantics, noise), width, height);
}

Image CodecSession::decompress(const CompressedImage& ci) const {
  const CodeGrid code = decode_symbols(ci);
  if (ci.mode == CodecMode::kGC) return render(code, ci.width, ci.height);
  const PolygonLabelMap labels = decode_label_map(*ci.labelmap_section, ci.width, ci.height);
  return render(code, ci.width, ci.height, &labels);
}

Heatmap preserve_heatmap(const PolygonLabelMap& labels, int width, int height, int block,
                         const std::vector<std::pair<int, int>>& preserve) {
  const LabelGrids grids = rasterize_label_map(labels, width, height);
  const std::set<std::pair<int, int>> keep(preserve.begin(), preserve.end());
  std::vector<std::uint8_t> mask(grids.classes.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = keep.count({grids.classes[i], grids.instances[i]}) ? 1 : 0;
  return heatmap_from_pixel_mask(mask, width, height, block);
}

BppReport measure_bpp(const CompressedImage& ci) {
  BppReport r;
  const double pixels = static_cast<double>(ci.width) * ci.height;
  const double positions = static_cast<double>(ci.code_height()) * ci.code_width();
  double kept = positions;
  if (ci.mode == CodecMode::kSC && ci.heatmap_section)
    kept = static_cast<double>(decode_heatmap(*ci.heatmap_section, ci.code_height(), ci.code_width()).preserved());
  const double bits_per_symbol = std::log2(static_cast<double>(ci.levels));
  r.preserved = positions > 0 ? kept / positions : 0.0;
  r.payload_bpp = static_cast<double>(ci.payload_bits) / pixels;
  r.total_bpp = static_cast<double>(ci.payload_bits + ci.header_bits) / pixels;
  r.heatmap_bpp = static_cast<double>(ci.heatmap_bits()) / pixels;
  r.labelmap_bpp = static_cast<double>(ci.labelmap_bits()) / pixels;
  r.header_bpp = r.total_bpp - r.payload_bpp - r.heatmap_bpp - r.labelmap_bpp;
  r.bound_bpp = kept * ci.channels * bits_per_symbol / pixels;
  r.full_bound_bpp = positions * ci.channels * bits_per_symbol / pixels;
  r.savings = r.bound_bpp > 0 ? 1.0 - r.payload_bpp / r.bound_bpp : 0.0;
  return r;
}

}  // namespace gcpress
