#include "gcpress/eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>

#include "gcpress/errors.hpp"
#include "gcpress/metrics.hpp"
#include "gcpress/parallel.hpp"

namespace gcpress {

namespace {

EvalRow evaluate_one(const CodecSession& session, const Sample& s) {
  CompressedImage ci;
  if (session.mode() == CodecMode::kSC) {
    if (!s.labels) throw UsageError(s.name + ": SC evaluation needs a label map");
    const Heatmap all(session.code_size(s.image.height), session.code_size(s.image.width), 1);
    ci = session.compress(s.image, *s.labels, all);
  } else {
    ci = session.compress(s.image);
  }
  const auto bytes = write_container(ci);
  const CompressedImage back = read_container(bytes);
  const Image out = session.decompress(back);
  EvalRow row;
  row.file = s.name;
  row.bits = measure_bpp(back);
  row.bpp = row.bits.total_bpp;
  row.psnr = psnr(s.image, out);
  row.ms_ssim = ms_ssim(s.image, out);
  return row;
}

}  // namespace

EvalSummary evaluate_dataset(const CodecSession& session, const Dataset& data) {
  if (data.empty()) throw UsageError("nothing to evaluate");
  EvalSummary out;
  out.rows.resize(data.size());
  std::vector<double> mses(data.size());
  std::exception_ptr failure;
  const long long n = static_cast<long long>(data.size());
#pragma omp parallel for schedule(dynamic) num_threads(num_threads()) if (num_threads() > 1)
  for (long long i = 0; i < n; ++i) {
    try {
      out.rows[static_cast<std::size_t>(i)] = evaluate_one(session, data[static_cast<std::size_t>(i)]);
      const double p = out.rows[static_cast<std::size_t>(i)].psnr;
      mses[static_cast<std::size_t>(i)] = std::isinf(p) ? 0.0 : 255.0 * 255.0 / std::pow(10.0, p / 10.0);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  int finite = 0;
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    const auto& r = out.rows[i];
    out.mean_bpp += r.bpp;
    out.mean_ms_ssim += r.ms_ssim;
    out.mean_mse += mses[i];
    if (!std::isinf(r.psnr)) {
      out.mean_psnr += r.psnr;
      ++finite;
    }
  }
  const double k = static_cast<double>(out.rows.size());
  out.mean_bpp /= k;
  out.mean_ms_ssim /= k;
  out.mean_mse /= k;
  out.mean_psnr = finite ? out.mean_psnr / finite : std::numeric_limits<double>::infinity();
  return out;
}

EvalSummary evaluate_directory(const CodecSession& session, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (e.is_regular_file() && ext == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UsageError("no PNG files in " + dir.string());
  Dataset data;
  for (const auto& f : files) {
    Sample s{f.filename().string(), read_png(f), std::nullopt};
    if (session.mode() == CodecMode::kSC) {
      const fs::path sidecar = f.parent_path() / (f.stem().string() + ".labels.txt");
      std::ifstream in(sidecar);
      if (!in) throw UsageError("missing label map " + sidecar.string());
      std::stringstream text;
      text << in.rdbuf();
      s.labels = parse_label_map(text.str());
    }
    data.push_back(std::move(s));
  }
  return evaluate_dataset(session, data);
}

std::string eval_csv(const EvalSummary& summary) {
  std::ostringstream o;
  o << "file,bpp,psnr,ms_ssim\n";
  for (const auto& r : summary.rows)
    o << r.file << ',' << format_metric(r.bpp, 6) << ',' << format_metric(r.psnr, 4) << ','
      << format_metric(r.ms_ssim, 6) << '\n';
  return o.str();
}

CodeGrid uniform_code(const CodecSession& session, int width, int height, std::mt19937_64& rng) {
  const NetConfig& net = session.net();
  CodeGrid code(session.code_size(height), session.code_size(width), net.channels, net.centers);
  std::uniform_int_distribution<int> symbol(0, net.centers.size() - 1);
  for (auto& s : code.symbols) s = static_cast<std::uint8_t>(symbol(rng));
  return code;
}

Image sample_uniform_latent(const CodecSession& session, int width, int height, std::mt19937_64& rng) {
  if (session.mode() != CodecMode::kGC) throw UsageError("uniform sampling needs a GC model");
  return session.render(uniform_code(session, width, height, rng), width, height);
}

}  // namespace gcpress
