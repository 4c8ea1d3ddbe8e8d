#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "gcpress/errors.hpp"
#include "gcpress/eval.hpp"
#include "gcpress/metrics.hpp"

namespace gcpress {
namespace {

namespace fs = std::filesystem;

TrainConfig small(TrainMode mode) {
  TrainConfig c;
  c.mode = mode;
  c.net.width_scale = 0.05;
  c.net.n_res = 1;
  c.seed = 8;
  return c;
}

CodecSession session(const TrainConfig& c) {
  return CodecSession(c, std::make_shared<const GanModel<float>>(c.model_config(), c.seed));
}

double pixel_variance(const std::vector<Image>& imgs) {
  // Variance across images, averaged over pixels and channels.
  const std::size_t n = imgs[0].rgb.size();
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double m = 0, m2 = 0;
    for (const auto& im : imgs) {
      m += im.rgb[i];
      m2 += static_cast<double>(im.rgb[i]) * im.rgb[i];
    }
    m /= static_cast<double>(imgs.size());
    acc += m2 / static_cast<double>(imgs.size()) - m * m;
  }
  return acc / static_cast<double>(n);
}

TEST(UniformSampling, ShapesSeedsAndDiversity) {
  const CodecSession s = session(small(TrainMode::kGC));
  std::mt19937_64 a(1), b(2);
  const CodeGrid ca = uniform_code(s, 64, 48, a), cb = uniform_code(s, 64, 48, b);
  EXPECT_EQ(ca.height, 3);
  EXPECT_EQ(ca.width, 4);
  int hamming = 0;
  for (std::size_t i = 0; i < ca.symbols.size(); ++i) hamming += ca.symbols[i] != cb.symbols[i];
  EXPECT_GT(hamming, 0);
  std::mt19937_64 rng(3);
  std::vector<Image> samples;
  for (int i = 0; i < 16; ++i) {
    samples.push_back(sample_uniform_latent(s, 64, 48, rng));
    EXPECT_EQ(samples.back().width, 64);
    EXPECT_EQ(samples.back().height, 48);
  }
  EXPECT_GT(pixel_variance(samples), 0.0);
  EXPECT_THROW(sample_uniform_latent(session(small(TrainMode::kSCRandomBox)), 64, 64, rng), UsageError);
}

TEST(Evaluate, DatasetRowsAndCsv) {
  const CodecSession s = session(small(TrainMode::kGC));
  SyntheticSpec spec;
  spec.count = 3;
  const Dataset data = synthetic_corpus(spec);
  const EvalSummary sum = evaluate_dataset(s, data);
  ASSERT_EQ(sum.rows.size(), 3u);
  for (const auto& r : sum.rows) {
    EXPECT_TRUE(std::isfinite(r.psnr));
    EXPECT_GT(r.bpp, r.bits.payload_bpp);
    EXPECT_GE(r.ms_ssim, 0.0);
    EXPECT_LE(r.ms_ssim, 1.0);
  }
  const std::string csv = eval_csv(sum);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "file,bpp,psnr,ms_ssim");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_NE(csv.find("synthetic_"), std::string::npos);
  // The reported MSE agrees with the per-row PSNR.
  double mse_sum = 0;
  for (const auto& r : sum.rows) mse_sum += 255.0 * 255.0 / std::pow(10.0, r.psnr / 10.0);
  EXPECT_NEAR(sum.mean_mse, mse_sum / 3, 1e-9 * mse_sum);
  EXPECT_THROW(evaluate_dataset(s, {}), UsageError);
}

TEST(Evaluate, DirectoryWithSidecarLabels) {
  const fs::path dir = fs::temp_directory_path() / ("gcpress_eval_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  const Sample a = synthetic_sample(64, 64, 4);
  write_png(dir / "a.png", a.image);
  const CodecSession sc = session(small(TrainMode::kSCRandomInstance));
  EXPECT_THROW(evaluate_directory(sc, dir), UsageError);
  std::ofstream(dir / "a.labels.txt") << format_label_map(*a.labels);
  const EvalSummary sum = evaluate_directory(sc, dir);
  ASSERT_EQ(sum.rows.size(), 1u);
  EXPECT_EQ(sum.rows[0].file, "a.png");
  EXPECT_GT(sum.rows[0].bits.labelmap_bpp, 0.0);
  EXPECT_EQ(evaluate_directory(session(small(TrainMode::kGC)), dir).rows.size(), 1u);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace gcpress
