// gcpress: train, encode, decode, evaluate and inspect generative compression models.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "gcpress/checkpoint.hpp"
#include "gcpress/codec.hpp"
#include "gcpress/errors.hpp"
#include "gcpress/eval.hpp"
#include "gcpress/metrics.hpp"
#include "gcpress/parallel.hpp"
#include "gcpress/trainer.hpp"

namespace fs = std::filesystem;
using namespace gcpress;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::pair<int, int>> parse_preserve(const std::string& text) {
  std::vector<int> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      ids.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--preserve expects class,instance pairs, got '" + text + "'");
    }
  }
  if (ids.empty() || ids.size() % 2) throw UsageError("--preserve expects class,instance pairs, got '" + text + "'");
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < ids.size(); i += 2) out.emplace_back(ids[i], ids[i + 1]);
  return out;
}

std::string bpp_lines(const CompressedImage& ci) {
  const BppReport r = measure_bpp(ci);
  std::ostringstream o;
  o << "payload_bits=" << ci.payload_bits << "\n"
    << "header_bits=" << ci.header_bits << "\n"
    << "heatmap_bits=" << ci.heatmap_bits() << "\n"
    << "labelmap_bits=" << ci.labelmap_bits() << "\n"
    << "payload_bpp=" << format_metric(r.payload_bpp, 6) << "\n"
    << "total_bpp=" << format_metric(r.total_bpp, 6) << "\n"
    << "bound_bpp=" << format_metric(r.bound_bpp, 6) << "\n"
    << "savings_percent=" << format_metric(100.0 * r.savings, 2) << "\n"
    << "preserved_fraction=" << format_metric(r.preserved, 4) << "\n";
  return o.str();
}

struct TrainArgs {
  std::string config, out, mode, data;
  std::vector<std::string> sets;
  int iterations = 0;
  long long seed = -1;
  int log_every = 100;
};

int run_train(const TrainArgs& a) {
  TrainConfig cfg;
  if (!a.config.empty()) cfg = load_train_config(a.config);
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!a.mode.empty()) cfg.mode = parse_train_mode(a.mode);
  if (a.iterations > 0) cfg.iterations = a.iterations;
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  if (!a.data.empty()) cfg.data_dir = a.data;
  cfg.validate();
  const Dataset data = load_training_data(cfg);
  TrainOptions opt;
  opt.out_dir = a.out;
  opt.on_step = [&](const StepReport& r) {
    if (a.log_every > 0 && (r.iteration % a.log_every == 0 || r.iteration == cfg.iterations))
      std::fprintf(stderr, "iteration=%lld d_loss=%.5f g_gan=%.5f distortion=%.5f fm=%.5f total=%.5f\n", r.iteration,
                   r.d_loss, r.g_gan, r.distortion, r.fm, r.total);
  };
  train_loop(data, cfg, opt);
  std::cout << "model_dir=" << a.out << "\n";
  return 0;
}

int run_encode(const std::string& model, const std::string& in, const std::string& out, const std::string& labels,
               const std::string& preserve) {
  const CodecSession session = CodecSession::load(model);
  const Image image = read_png(in);
  CompressedImage ci;
  if (session.mode() == CodecMode::kSC) {
    if (labels.empty()) throw UsageError("SC model: --labels is required");
    const PolygonLabelMap map = parse_label_map(read_text(labels));
    const Heatmap keep = preserve.empty()
                             ? Heatmap(session.code_size(image.height), session.code_size(image.width), 1)
                             : preserve_heatmap(map, image.width, image.height, session.net().downsample,
                                                parse_preserve(preserve));
    ci = session.compress(image, map, keep);
  } else {
    if (!labels.empty() || !preserve.empty()) throw UsageError("--labels/--preserve apply to SC models only");
    ci = session.compress(image);
  }
  write_file_atomic(out, write_container(ci));
  std::cout << bpp_lines(ci);
  return 0;
}

int run_decode(const std::string& model, const std::string& in, const std::string& out) {
  const CodecSession session = CodecSession::load(model);
  const CompressedImage ci = read_container(read_file(in));
  write_png(out, session.decompress(ci));
  return 0;
}

int run_eval(const std::string& model, const std::string& dir, const std::string& out) {
  const CodecSession session = CodecSession::load(model);
  const EvalSummary sum = evaluate_directory(session, dir);
  const std::string csv = eval_csv(sum);
  if (out.empty()) std::cout << csv;
  else write_text_atomic(out, csv);
  std::cerr << "mean_bpp=" << format_metric(sum.mean_bpp, 6) << " mean_psnr=" << format_metric(sum.mean_psnr)
            << " mean_ms_ssim=" << format_metric(sum.mean_ms_ssim) << "\n";
  return 0;
}

int run_sample(const std::string& model, std::uint64_t seed, const std::string& out, int width, int height) {
  const CodecSession session = CodecSession::load(model);
  std::mt19937_64 rng(seed);
  write_png(out, sample_uniform_latent(session, width, height, rng));
  return 0;
}

int run_inspect(const std::string& in) {
  const auto bytes = read_file(in);
  const CompressedImage ci = read_container(bytes);
  std::cout << "format=GCX" << static_cast<int>(CompressedImage::kVersion) << "\n"
            << "mode=" << (ci.mode == CodecMode::kGC ? "GC" : "SC") << "\n"
            << "width=" << ci.width << "\n"
            << "height=" << ci.height << "\n"
            << "channels=" << ci.channels << "\n"
            << "levels=" << ci.levels << "\n"
            << "downsample=" << ci.downsample << "\n"
            << "file_bytes=" << bytes.size() << "\n"
            << bpp_lines(ci);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generative image compression: train, encode, decode, eval, sample, inspect"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model into an output directory");
  t->add_option("--config", train.config, "key=value config file")->check(CLI::ExistingFile);
  t->add_option("--out", train.out, "Model directory to write")->required();
  t->add_option("--set", train.sets, "Override one config key (key=value); repeatable");
  t->add_option("--mode", train.mode, "GC, GC_Dplus, SC_RI, SC_RB or MSE_baseline");
  t->add_option("--iterations", train.iterations, "Training iterations")->check(CLI::PositiveNumber);
  t->add_option("--seed", train.seed, "Random seed")->check(CLI::NonNegativeNumber);
  t->add_option("--data", train.data, "Folder of PNG training images (default: synthetic corpus)");
  t->add_option("--log-every", train.log_every, "Progress line interval on stderr (0: silent)");

  std::string model, in, out, labels, preserve, dir;
  auto* e = app.add_subcommand("encode", "Compress a PNG into a .gcx container");
  e->add_option("--model", model)->required()->check(CLI::ExistingDirectory);
  e->add_option("--in", in)->required()->check(CLI::ExistingFile);
  e->add_option("--out", out)->required();
  e->add_option("--labels", labels, "Polygon label map (SC models)")->check(CLI::ExistingFile);
  e->add_option("--preserve", preserve, "class,instance pairs to preserve (SC; default: everything)");

  auto* d = app.add_subcommand("decode", "Reconstruct a PNG from a .gcx container");
  d->add_option("--model", model)->required()->check(CLI::ExistingDirectory);
  d->add_option("--in", in)->required()->check(CLI::ExistingFile);
  d->add_option("--out", out)->required();

  auto* v = app.add_subcommand("eval", "Compress and score every PNG in a folder");
  v->add_option("--model", model)->required()->check(CLI::ExistingDirectory);
  v->add_option("--dir", dir)->required()->check(CLI::ExistingDirectory);
  v->add_option("--out", out, "CSV file (default: stdout)");

  std::uint64_t seed = 0;
  int width = 64, height = 64;
  auto* s = app.add_subcommand("sample", "Decode a uniformly random code");
  s->add_option("--model", model)->required()->check(CLI::ExistingDirectory);
  s->add_option("--seed", seed)->required();
  s->add_option("--out", out)->required();
  s->add_option("--width", width)->check(CLI::PositiveNumber);
  s->add_option("--height", height)->check(CLI::PositiveNumber);

  auto* i = app.add_subcommand("inspect", "Print container header and bit accounting");
  i->add_option("--in", in)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  try {
    init_threads_from_env();
    if (*t) return run_train(train);
    if (*e) return run_encode(model, in, out, labels, preserve);
    if (*d) return run_decode(model, in, out);
    if (*v) return run_eval(model, dir, out);
    if (*s) return run_sample(model, seed, out, width, height);
    if (*i) return run_inspect(in);
  } catch (const NumericalError& err) {
    std::cerr << "numerical error: " << err.what() << "\n";
    return 3;
  } catch (const CorruptionError& err) {
    std::cerr << "corrupt input: " << err.what() << "\n";
    return 2;
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 1;
}
