#include "gcpress/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "gcpress/errors.hpp"

namespace gcpress {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class N>
N parse_number(const std::string& key, const std::string& v) {
  N out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("config: bad value for " + key + ": '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

template <class N>
std::string num(N v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<float> parse_floats(const std::string& key, const std::string& v) {
  std::vector<float> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<float>(key, trim(item)));
  return out;
}

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"mode", [](auto& c, auto&, auto& v) { c.mode = parse_train_mode(v); }},
      {"iterations", [](auto& c, auto& k, auto& v) { c.iterations = parse_number<int>(k, v); }},
      {"lr", [](auto& c, auto& k, auto& v) { c.lr = parse_number<double>(k, v); }},
      {"beta1", [](auto& c, auto& k, auto& v) { c.beta1 = parse_number<double>(k, v); }},
      {"beta2", [](auto& c, auto& k, auto& v) { c.beta2 = parse_number<double>(k, v); }},
      {"batch", [](auto& c, auto& k, auto& v) { c.batch = parse_number<int>(k, v); }},
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"checkpoint_every", [](auto& c, auto& k, auto& v) { c.checkpoint_every = parse_number<int>(k, v); }},
      {"norm_mode",
       [](auto& c, auto& k, auto& v) {
         if (v == "instance") c.norm_mode = NormMode::kInstance;
         else if (v == "instance_then_fixed") c.norm_mode = NormMode::kInstanceThenFixed;
         else throw ConfigError("config: bad value for " + k + ": '" + v + "'");
       }},
      {"lambda", [](auto& c, auto& k, auto& v) { c.weights.lambda_d = parse_number<double>(k, v); }},
      {"w_fm", [](auto& c, auto& k, auto& v) { c.weights.w_fm = parse_number<double>(k, v); }},
      {"beta", [](auto& c, auto& k, auto& v) { c.weights.beta = parse_number<double>(k, v); }},
      {"gan_form",
       [](auto& c, auto& k, auto& v) {
         if (v == "non_saturating") c.gan_form = GeneratorGanForm::kNonSaturating;
         else if (v == "literal") c.gan_form = GeneratorGanForm::kLiteral;
         else throw ConfigError("config: bad value for " + k + ": '" + v + "'");
       }},
      {"ri_fraction", [](auto& c, auto& k, auto& v) { c.ri_fraction = parse_number<double>(k, v); }},
      {"rb_min", [](auto& c, auto& k, auto& v) { c.rb_min = parse_number<double>(k, v); }},
      {"rb_max", [](auto& c, auto& k, auto& v) { c.rb_max = parse_number<double>(k, v); }},
      {"data_dir", [](auto& c, auto&, auto& v) { c.data_dir = v; }},
      {"synthetic_count", [](auto& c, auto& k, auto& v) { c.synthetic_count = parse_number<int>(k, v); }},
      {"crop", [](auto& c, auto& k, auto& v) { c.crop = parse_number<int>(k, v); }},
      {"width_scale", [](auto& c, auto& k, auto& v) { c.net.width_scale = parse_number<double>(k, v); }},
      {"channels", [](auto& c, auto& k, auto& v) { c.net.channels = parse_number<int>(k, v); }},
      {"n_res", [](auto& c, auto& k, auto& v) { c.net.n_res = parse_number<int>(k, v); }},
      {"d_scales", [](auto& c, auto& k, auto& v) { c.net.d_scales = parse_number<int>(k, v); }},
      {"d_layers", [](auto& c, auto& k, auto& v) { c.net.d_layers = parse_number<int>(k, v); }},
      {"use_noise", [](auto& c, auto& k, auto& v) { c.net.use_noise = parse_bool(k, v); }},
      {"noise_dim", [](auto& c, auto& k, auto& v) { c.net.noise_dim = parse_number<int>(k, v); }},
      {"num_classes", [](auto& c, auto& k, auto& v) { c.net.num_classes = parse_number<int>(k, v); }},
      {"centers",
       [](auto& c, auto& k, auto& v) { c.net.centers = CenterSet(parse_floats(k, v), c.net.centers.sigma()); }},
      {"sigma",
       [](auto& c, auto& k, auto& v) { c.net.centers = CenterSet(c.net.centers.values(), parse_number<float>(k, v)); }},
      {"encoder_spec", [](auto& c, auto&, auto& v) { c.net.encoder_spec = v; }},
      {"generator_spec", [](auto& c, auto&, auto& v) { c.net.generator_spec = v; }},
      {"feature_spec", [](auto& c, auto&, auto& v) { c.net.feature_spec = v; }},
  };
  return table;
}

}  // namespace

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kGC: return "GC";
    case TrainMode::kGCDplus: return "GC_Dplus";
    case TrainMode::kSCRandomInstance: return "SC_RI";
    case TrainMode::kSCRandomBox: return "SC_RB";
    case TrainMode::kMSEBaseline: return "MSE_baseline";
  }
  return "?";
}

TrainMode parse_train_mode(const std::string& text) {
  for (auto m : {TrainMode::kGC, TrainMode::kGCDplus, TrainMode::kSCRandomInstance, TrainMode::kSCRandomBox,
                 TrainMode::kMSEBaseline})
    if (to_string(m) == text) return m;
  throw ConfigError("unknown training mode '" + text + "' (GC, GC_Dplus, SC_RI, SC_RB, MSE_baseline)");
}

bool is_semantic(TrainMode mode) {
  return mode == TrainMode::kSCRandomInstance || mode == TrainMode::kSCRandomBox;
}

TrainConfig::TrainConfig() { net.num_classes = 5; }

NetConfig TrainConfig::model_config() const {
  NetConfig n = net;
  n.semantic = is_semantic(mode);
  n.conditional_d = mode == TrainMode::kGCDplus;
  // The code grid sits below every strided layer ahead of q.
  const LayerSpec enc = parse_layer_spec(n.effective_encoder_spec());
  const int q = enc.quantize_index();
  int factor = 1;
  for (int i = 0; i < (q < 0 ? static_cast<int>(enc.tokens.size()) : q); ++i)
    if (enc.tokens[static_cast<std::size_t>(i)].kind == LayerKind::kDown) factor *= 2;
  n.downsample = factor;
  return n;
}

void TrainConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (!(lr > 0)) throw ConfigError("lr must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("Adam betas must lie in [0, 1)");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (!(ri_fraction > 0 && ri_fraction <= 1)) throw ConfigError("ri_fraction must lie in (0, 1]");
  if (!(rb_min > 0 && rb_min <= rb_max && rb_max <= 1)) throw ConfigError("need 0 < rb_min <= rb_max <= 1");
  if (synthetic_count < 1) throw ConfigError("synthetic_count must be >= 1");
  if (crop < 0) throw ConfigError("crop must be >= 0");
  const NetConfig n = model_config();
  n.validate();
  if (crop > 0 && crop % n.image_multiple() != 0)
    throw ConfigError("crop " + std::to_string(crop) + " is not a multiple of " + std::to_string(n.image_multiple()));
  if ((n.semantic || n.conditional_d) && n.num_classes < 1) throw ConfigError(to_string(mode) + " needs num_classes");
  weights.validate();
}

void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("config: unknown key '" + key + "'");
  it->second(cfg, key, value);
}

TrainConfig parse_train_config(const std::string& text, TrainConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_train_config(ss.str(), std::move(base));
}

std::string format_train_config(const TrainConfig& c) {
  std::ostringstream o;
  std::string centers;
  for (float v : c.net.centers.values()) centers += (centers.empty() ? "" : ",") + num(v);
  o << "mode=" << to_string(c.mode) << "\n"
    << "iterations=" << c.iterations << "\n"
    << "lr=" << num(c.lr) << "\n"
    << "beta1=" << num(c.beta1) << "\n"
    << "beta2=" << num(c.beta2) << "\n"
    << "batch=" << c.batch << "\n"
    << "seed=" << c.seed << "\n"
    << "checkpoint_every=" << c.checkpoint_every << "\n"
    << "norm_mode=" << (c.norm_mode == NormMode::kInstance ? "instance" : "instance_then_fixed") << "\n"
    << "lambda=" << num(c.weights.lambda_d) << "\n"
    << "w_fm=" << num(c.weights.w_fm) << "\n"
    << "beta=" << num(c.weights.beta) << "\n"
    << "gan_form=" << (c.gan_form == GeneratorGanForm::kNonSaturating ? "non_saturating" : "literal") << "\n"
    << "ri_fraction=" << num(c.ri_fraction) << "\n"
    << "rb_min=" << num(c.rb_min) << "\n"
    << "rb_max=" << num(c.rb_max) << "\n"
    << "data_dir=" << c.data_dir << "\n"
    << "synthetic_count=" << c.synthetic_count << "\n"
    << "crop=" << c.crop << "\n"
    << "width_scale=" << num(c.net.width_scale) << "\n"
    << "channels=" << c.net.channels << "\n"
    << "n_res=" << c.net.n_res << "\n"
    << "d_scales=" << c.net.d_scales << "\n"
    << "d_layers=" << c.net.d_layers << "\n"
    << "use_noise=" << (c.net.use_noise ? "true" : "false") << "\n"
    << "noise_dim=" << c.net.noise_dim << "\n"
    << "num_classes=" << c.net.num_classes << "\n"
    << "centers=" << centers << "\n"
    << "sigma=" << num(c.net.centers.sigma()) << "\n"
    << "encoder_spec=" << c.net.encoder_spec << "\n"
    << "generator_spec=" << c.net.generator_spec << "\n"
    << "feature_spec=" << c.net.feature_spec << "\n";
  return o.str();
}

}  // namespace gcpress
