#include "gcpress/networks.hpp"

#include <cmath>
#include <random>
#include <regex>
#include <sstream>

namespace gcpress {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

int parse_width(const std::string& text, const std::string& token) {
  if (text == "C") return LayerToken::kBottleneck;
  try {
    std::size_t used = 0;
    const int w = std::stoi(text, &used);
    if (used == text.size() && w > 0) return w;
  } catch (const std::exception&) {
  }
  throw ConfigError("layer spec: bad width in '" + token + "'");
}

}  // namespace

int LayerSpec::quantize_index() const {
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i].kind == LayerKind::kQuantize) return static_cast<int>(i);
  return -1;
}

int LayerSpec::count(LayerKind kind) const {
  int n = 0;
  for (const auto& t : tokens) n += t.kind == kind;
  return n;
}

LayerSpec parse_layer_spec(const std::string& text) {
  static const std::regex conv_re(R"(c([37])s1-(\w+))");
  static const std::regex simple_re(R"(([duR])(\w+))");
  // "R960x9" / "R960×9" / "R960 x 9"
  static const std::regex repeat_re(R"((.+?)\s*(?:x|×)\s*(\d+))");
  LayerSpec spec;
  std::stringstream ss(text);
  std::string raw;
  while (std::getline(ss, raw, ',')) {
    std::string token = trim(raw);
    if (token.empty()) throw ConfigError("layer spec: empty token in '" + text + "'");
    int repeat = 1;
    std::smatch m;
    if (token != "q" && std::regex_match(token, m, repeat_re) && m[1].str().front() == 'R') {
      repeat = std::stoi(m[2].str());
      token = trim(m[1].str());
      if (repeat < 1) throw ConfigError("layer spec: bad repeat count in '" + raw + "'");
    }
    LayerToken t;
    if (token == "q") {
      t.kind = LayerKind::kQuantize;
    } else if (std::regex_match(token, m, conv_re)) {
      t.kind = m[1].str() == "7" ? LayerKind::kC7s1 : LayerKind::kC3s1;
      t.width = parse_width(m[2].str(), token);
    } else if (std::regex_match(token, m, simple_re)) {
      const char k = m[1].str()[0];
      t.kind = k == 'd' ? LayerKind::kDown : k == 'u' ? LayerKind::kUp : LayerKind::kResidual;
      t.width = parse_width(m[2].str(), token);
    } else {
      throw ConfigError("layer spec: unknown token '" + token + "'");
    }
    for (int i = 0; i < repeat; ++i) spec.tokens.push_back(t);
  }
  if (spec.count(LayerKind::kQuantize) > 1) throw ConfigError("layer spec: 'q' may appear only once");
  return spec;
}

std::string format_layer_spec(const LayerSpec& spec) {
  std::string out;
  for (const auto& t : spec.tokens) {
    if (!out.empty()) out += ", ";
    const std::string w = t.width == LayerToken::kBottleneck ? "C" : std::to_string(t.width);
    switch (t.kind) {
      case LayerKind::kC7s1: out += "c7s1-" + w; break;
      case LayerKind::kC3s1: out += "c3s1-" + w; break;
      case LayerKind::kDown: out += "d" + w; break;
      case LayerKind::kUp: out += "u" + w; break;
      case LayerKind::kResidual: out += "R" + w; break;
      case LayerKind::kQuantize: out += "q"; break;
    }
  }
  return out;
}

std::string default_encoder_spec(bool semantic) {
  return semantic ? "c7s1-60, d120, d240, d480, c3s1-C, q, c3s1-480, d960"
                  : "c7s1-60, d120, d240, d480, d960, c3s1-C, q";
}

std::string default_generator_spec(int n_res) {
  std::string s = "c3s1-960";
  for (int i = 0; i < n_res; ++i) s += ", R960";
  return s + ", u480, u240, u120, u60, c7s1-3";
}

std::string default_feature_spec() { return "c7s1-60, d120, d240, d480"; }

int NetConfig::scaled(int width) const {
  return std::max(1, static_cast<int>(std::ceil(width * width_scale - 1e-9)));
}

std::string NetConfig::effective_encoder_spec() const {
  return encoder_spec.empty() ? default_encoder_spec(semantic) : encoder_spec;
}
std::string NetConfig::effective_generator_spec() const {
  return generator_spec.empty() ? default_generator_spec(n_res) : generator_spec;
}
std::string NetConfig::effective_feature_spec() const {
  return feature_spec.empty() ? default_feature_spec() : feature_spec;
}

int NetConfig::image_multiple() const {
  return 1 << parse_layer_spec(effective_encoder_spec()).count(LayerKind::kDown);
}

void NetConfig::validate() const {
  if (!(width_scale > 0.0)) throw ConfigError("width_scale must be positive");
  if (channels < 1 || channels > 255) throw ConfigError("channels must be in [1, 255]");
  if (downsample < 1 || (downsample & (downsample - 1)) != 0) throw ConfigError("downsample must be a power of two");
  if (n_res < 0) throw ConfigError("n_res must be non-negative");
  if (d_scales < 1) throw ConfigError("d_scales must be at least 1");
  if (d_layers < 1) throw ConfigError("d_layers must be at least 1");
  if (image_channels < 1) throw ConfigError("image_channels must be positive");
  if (use_noise && noise_dim < 1) throw ConfigError("use_noise requires noise_dim >= 1");
  if ((semantic || conditional_d) && num_classes < 1) throw ConfigError("semantic conditioning requires num_classes >= 1");
  if (semantic && conditional_d) throw ConfigError("semantic and conditional_d are exclusive modes");
  if (semantic && centers.zero_index() < 0) throw ConfigError("SC mode needs a center equal to 0");
  plan_network(*this);
}

std::size_t LayerPlan::parameter_count() const {
  return static_cast<std::size_t>(in_channels) * out_channels * kernel * kernel + (bias ? out_channels : 0);
}

std::size_t NetworkPlan::eg_parameter_count() const {
  std::size_t n = 0;
  for (const auto* part : {&encoder, &post, &feature, &generator})
    for (const auto& l : *part) n += l.parameter_count();
  return n;
}

std::size_t NetworkPlan::d_parameter_count() const {
  std::size_t n = 0;
  for (const auto& scale : discriminator)
    for (const auto& l : scale) n += l.parameter_count();
  return n;
}

namespace {

struct PlanBuilder {
  const NetConfig& cfg;
  std::string prefix;
  std::vector<LayerPlan> layers;
  int channels;
  int log_scale = 0;  // net stride change: +1 per downsampling, -1 per upsampling

  void add(LayerPlan l, const std::string& suffix) {
    l.name = prefix + "." + std::to_string(layers.size()) + suffix;
    channels = l.out_channels;
    layers.push_back(std::move(l));
  }

  int width_of(const LayerToken& t) const {
    return t.width == LayerToken::kBottleneck ? cfg.channels : cfg.scaled(t.width);
  }

  static LayerPlan conv(int in, int out, int k, int stride, int pad) {
    LayerPlan l;
    l.in_channels = in;
    l.out_channels = out;
    l.kernel = k;
    l.stride = stride;
    l.pad = pad;
    return l;
  }

  // `final_role`: 0 ordinary, 1 plain projection to C (before q), 2 image output with tanh.
  void token(const LayerToken& t, int final_role) {
    switch (t.kind) {
      case LayerKind::kC7s1:
      case LayerKind::kC3s1: {
        const int k = t.kind == LayerKind::kC7s1 ? 7 : 3;
        LayerPlan l = conv(channels, width_of(t), k, 1, k / 2);
        if (final_role == 1) {
          l.out_channels = cfg.channels;
          l.norm = false;
          l.has_act = false;
          l.bias = true;
        } else if (final_role == 2) {
          l.out_channels = cfg.image_channels;
          l.norm = false;
          l.bias = true;
          l.act = Activation::tanh();
        }
        add(l, "");
        break;
      }
      case LayerKind::kDown:
        add(conv(channels, width_of(t), 3, 2, 1), "");
        ++log_scale;
        break;
      case LayerKind::kUp: {
        LayerPlan l = conv(channels, width_of(t), 3, 2, 1);
        l.transpose = true;
        l.output_pad = 1;
        add(l, "");
        --log_scale;
        break;
      }
      case LayerKind::kResidual: {
        const int w = width_of(t);
        if (w != channels)
          throw ConfigError(prefix + ": residual block width " + std::to_string(w) + " does not match input " +
                            std::to_string(channels));
        LayerPlan a = conv(w, w, 3, 1, 1);
        a.residual_first = true;
        LayerPlan b = conv(w, w, 3, 1, 1);
        b.residual_second = true;
        b.has_act = false;
        const std::string base = prefix + "." + std::to_string(layers.size());
        a.name = base + ".a";
        b.name = base + ".b";
        layers.push_back(a);
        layers.push_back(b);
        break;
      }
      case LayerKind::kQuantize:
        throw ConfigError(prefix + ": unexpected q");
    }
  }
};

}  // namespace

NetworkPlan plan_network(const NetConfig& cfg) {
  NetworkPlan plan;
  const LayerSpec enc = parse_layer_spec(cfg.effective_encoder_spec());
  const int q = enc.quantize_index();
  if (q < 1) throw ConfigError("encoder spec needs a 'q' token after at least one layer");
  const LayerToken& proj = enc.tokens[static_cast<std::size_t>(q) - 1];
  if (proj.kind != LayerKind::kC3s1 && proj.kind != LayerKind::kC7s1)
    throw ConfigError("encoder spec: the layer before 'q' must be a c3s1/c7s1 projection");
  if (proj.width != LayerToken::kBottleneck && proj.width != cfg.channels)
    throw ConfigError("encoder spec: the layer before 'q' must have width C");

  PlanBuilder e{cfg, "E", {}, cfg.image_channels};
  for (int i = 0; i < q; ++i) e.token(enc.tokens[static_cast<std::size_t>(i)], i == q - 1 ? 1 : 0);
  if ((1 << e.log_scale) != cfg.downsample)
    throw ConfigError("encoder spec downsamples by " + std::to_string(1 << e.log_scale) + ", config says " +
                      std::to_string(cfg.downsample));
  plan.encoder = std::move(e.layers);

  int g_in = cfg.channels + (cfg.use_noise ? cfg.noise_dim : 0);
  if (cfg.semantic) {
    PlanBuilder f{cfg, "F", {}, cfg.num_classes};
    for (const auto& t : parse_layer_spec(cfg.effective_feature_spec()).tokens) {
      if (t.kind == LayerKind::kQuantize) throw ConfigError("feature spec must not contain 'q'");
      f.token(t, 0);
    }
    if ((1 << f.log_scale) != cfg.downsample || f.log_scale < 0)
      throw ConfigError("feature extractor must output at code resolution");
    plan.feature_channels = f.channels;
    plan.feature = std::move(f.layers);
    g_in += plan.feature_channels;
  }
  int log_scale = e.log_scale;
  PlanBuilder p{cfg, "P", {}, g_in};
  for (std::size_t i = static_cast<std::size_t>(q) + 1; i < enc.tokens.size(); ++i) p.token(enc.tokens[i], 0);
  if (!p.layers.empty() && !cfg.semantic) throw ConfigError("tokens after 'q' are only supported in SC mode");
  log_scale += p.log_scale;
  plan.post = std::move(p.layers);

  const LayerSpec gen = parse_layer_spec(cfg.effective_generator_spec());
  if (gen.tokens.empty() || gen.tokens.back().kind != LayerKind::kC7s1)
    throw ConfigError("generator spec must end with a c7s1 output layer");
  PlanBuilder g{cfg, "G", {}, p.channels};
  for (std::size_t i = 0; i < gen.tokens.size(); ++i) {
    if (gen.tokens[i].kind == LayerKind::kQuantize) throw ConfigError("generator spec must not contain 'q'");
    g.token(gen.tokens[i], i + 1 == gen.tokens.size() ? 2 : 0);
  }
  if (log_scale + g.log_scale != 0) throw ConfigError("generator does not return to image resolution");
  plan.generator = std::move(g.layers);

  const int d_in = cfg.image_channels + (cfg.conditional_d ? cfg.num_classes : 0);
  for (int s = 0; s < cfg.d_scales; ++s) {
    PlanBuilder d{cfg, "D" + std::to_string(s), {}, d_in};
    for (int n = 0; n <= cfg.d_layers; ++n) {
      LayerPlan l = PlanBuilder::conv(d.channels, cfg.scaled(std::min(64 << n, 512)), 4, n < cfg.d_layers ? 2 : 1, 2);
      l.act = Activation::leaky_relu(0.2);
      if (n == 0) {
        l.norm = false;
        l.bias = true;
      }
      d.add(l, "");
    }
    LayerPlan out = PlanBuilder::conv(d.channels, 1, 4, 1, 2);
    out.norm = false;
    out.has_act = false;
    out.bias = true;
    d.add(out, "");
    plan.discriminator.push_back(std::move(d.layers));
  }
  return plan;
}

template <class T>
BasicTensor<T> ConvLayer<T>::conv(const BasicTensor<T>& x) const {
  return plan.transpose ? conv2d_transpose(x, weight, bias, plan.stride, plan.pad, plan.output_pad)
                        : conv2d(x, weight, bias, plan.stride, plan.pad);
}

template <class T>
Stack<T>::Stack(const std::vector<LayerPlan>& plan, std::uint64_t& seed_state) {
  for (const auto& lp : plan) {
    ConvLayer<T> layer;
    layer.plan = lp;
    const Shape shape = lp.transpose ? Shape{lp.in_channels, lp.out_channels, lp.kernel, lp.kernel}
                                     : Shape{lp.out_channels, lp.in_channels, lp.kernel, lp.kernel};
    std::mt19937_64 rng(splitmix(seed_state++));
    double fan_in = static_cast<double>(lp.in_channels) * lp.kernel * lp.kernel;
    if (lp.transpose) fan_in /= static_cast<double>(lp.stride) * lp.stride;
    std::normal_distribution<float> normal(0.0f, static_cast<float>(std::sqrt(1.0 / fan_in)));
    std::vector<T> w(shape_numel(shape));
    for (auto& v : w) v = static_cast<T>(normal(rng));
    layer.weight = BasicTensor<T>::from(shape, std::move(w)).set_requires_grad();
    if (lp.bias) layer.bias = BasicTensor<T>::zeros({lp.out_channels}).set_requires_grad();
    layers_.push_back(std::move(layer));
  }
}

template <class T>
BasicTensor<T> Stack<T>::forward(const BasicTensor<T>& x, std::vector<BasicTensor<T>>* taps) const {
  BasicTensor<T> h = x;
  BasicTensor<T> block_input;
  for (const auto& layer : layers_) {
    const LayerPlan& p = layer.plan;
    if (p.residual_first) block_input = h;
    h = layer.conv(h);
    if (p.norm) h = instance_norm(h, BasicTensor<T>{}, BasicTensor<T>{});
    if (p.has_act) h = activation(h, p.act);
    if (p.residual_second) h = add(block_input, h);
    if (taps && !p.residual_first) taps->push_back(h);
  }
  return h;
}

template <class T>
void Stack<T>::collect(std::vector<Param<T>>& out) const {
  for (const auto& l : layers_) {
    out.push_back({l.plan.name + ".weight", l.weight});
    if (l.bias.defined()) out.push_back({l.plan.name + ".bias", l.bias});
  }
}

template <class T>
GanModel<T>::GanModel(NetConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  plan_ = plan_network(cfg_);
  std::uint64_t state = seed;
  encoder_ = Stack<T>(plan_.encoder, state);
  post_ = Stack<T>(plan_.post, state);
  feature_ = Stack<T>(plan_.feature, state);
  generator_ = Stack<T>(plan_.generator, state);
  for (const auto& d : plan_.discriminator) discriminator_.emplace_back(d, state);
}

template <class T>
BasicTensor<T> GanModel<T>::encode(const BasicTensor<T>& x) const {
  if (x.rank() != 4 || x.dim(1) != cfg_.image_channels)
    throw UsageError("encoder input must be 1 x " + std::to_string(cfg_.image_channels) + " x H x W, got " +
                     shape_to_string(x.shape()));
  if (x.dim(2) % cfg_.downsample != 0 || x.dim(3) % cfg_.downsample != 0)
    throw UsageError("encoder input " + shape_to_string(x.shape()) + " is not a multiple of " +
                     std::to_string(cfg_.downsample));
  return encoder_.forward(x);
}

template <class T>
BasicTensor<T> GanModel<T>::generate(const BasicTensor<T>& w_hat, const BasicTensor<T>& semantics,
                                     const BasicTensor<T>& noise) const {
  if (w_hat.rank() != 4 || w_hat.dim(1) != cfg_.channels)
    throw UsageError("generator input must have " + std::to_string(cfg_.channels) + " channels, got " +
                     shape_to_string(w_hat.shape()));
  std::vector<BasicTensor<T>> parts{w_hat};
  if (cfg_.use_noise) {
    if (!noise.defined()) throw UsageError("model uses noise but none was supplied");
    if (noise.rank() != 4 || noise.dim(1) != cfg_.noise_dim || noise.dim(2) != w_hat.dim(2) ||
        noise.dim(3) != w_hat.dim(3))
      throw UsageError("noise grid shape " + shape_to_string(noise.shape()) + " does not match the code");
    parts.push_back(noise);
  } else if (noise.defined()) {
    throw UsageError("model does not use noise");
  }
  if (cfg_.semantic) {
    if (!semantics.defined()) throw UsageError("SC generator needs the semantic label map");
    if (semantics.dim(2) != w_hat.dim(2) * cfg_.downsample || semantics.dim(3) != w_hat.dim(3) * cfg_.downsample)
      throw UsageError("label map size does not match the code");
    parts.push_back(extract_features(semantics));
  }
  BasicTensor<T> h = parts.size() == 1 ? w_hat : concat_channels(parts);
  if (!post_.empty()) h = post_.forward(h);
  return generator_.forward(h);
}

template <class T>
BasicTensor<T> GanModel<T>::extract_features(const BasicTensor<T>& semantics) const {
  if (!cfg_.semantic) throw UsageError("feature extractor exists only in SC mode");
  if (semantics.rank() != 4 || semantics.dim(1) != cfg_.num_classes)
    throw ConfigError("label map has " + std::to_string(semantics.rank() == 4 ? semantics.dim(1) : 0) +
                      " classes, model expects " + std::to_string(cfg_.num_classes));
  return feature_.forward(semantics);
}

template <class T>
DiscriminatorOutput<T> GanModel<T>::discriminate(const BasicTensor<T>& x, const BasicTensor<T>& semantics) const {
  if (cfg_.conditional_d && !semantics.defined()) throw UsageError("conditional discriminator needs the label map");
  DiscriminatorOutput<T> out;
  BasicTensor<T> image = x;
  BasicTensor<T> sem = cfg_.conditional_d ? semantics : BasicTensor<T>{};
  for (std::size_t s = 0; s < discriminator_.size(); ++s) {
    if (s > 0) {
      image = avg_pool2d(image, 2, 2);
      if (sem.defined()) sem = avg_pool2d(sem, 2, 2);
    }
    const BasicTensor<T> input = sem.defined() ? concat_channels<T>({image, sem}) : image;
    std::vector<BasicTensor<T>> taps;
    out.logits.push_back(discriminator_[s].forward(input, &taps));
    taps.pop_back();
    out.features.push_back(std::move(taps));
  }
  return out;
}

template <class T>
std::vector<Param<T>> GanModel<T>::eg_parameters() const {
  std::vector<Param<T>> out;
  encoder_.collect(out);
  post_.collect(out);
  feature_.collect(out);
  generator_.collect(out);
  return out;
}

template <class T>
std::vector<Param<T>> GanModel<T>::d_parameters() const {
  std::vector<Param<T>> out;
  for (const auto& d : discriminator_) d.collect(out);
  return out;
}

template <class T>
std::vector<Param<T>> GanModel<T>::parameters() const {
  auto out = eg_parameters();
  for (auto& p : d_parameters()) out.push_back(std::move(p));
  return out;
}

template <class T>
BasicTensor<T> one_hot(const LabelGrids& grids, int classes) {
  const std::size_t plane = static_cast<std::size_t>(grids.width) * grids.height;
  std::vector<T> v(plane * static_cast<std::size_t>(classes), T(0));
  for (std::size_t i = 0; i < plane; ++i) {
    const int c = grids.classes[i];
    if (c < 0 || c >= classes)
      throw ConfigError("class id " + std::to_string(c) + " outside [0, " + std::to_string(classes) + ")");
    v[static_cast<std::size_t>(c) * plane + i] = T(1);
  }
  return BasicTensor<T>::from({1, classes, grids.height, grids.width}, std::move(v));
}

Tensor noise_grid(int noise_dim, int height, int width, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix(seed));
  std::normal_distribution<float> normal;
  std::vector<float> v(static_cast<std::size_t>(noise_dim) * height * width);
  for (auto& x : v) x = normal(rng);
  return Tensor::from({1, noise_dim, height, width}, std::move(v));
}

template struct ConvLayer<float>;
template struct ConvLayer<double>;
template class Stack<float>;
template class Stack<double>;
template class GanModel<float>;
template class GanModel<double>;
template Tensor one_hot<float>(const LabelGrids&, int);
template Tensor64 one_hot<double>(const LabelGrids&, int);

}  // namespace gcpress
