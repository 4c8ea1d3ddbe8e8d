#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "gcpress/config.hpp"
#include "gcpress/errors.hpp"
#include "gcpress/model_store.hpp"
#include "gcpress/trainer.hpp"

namespace gcpress {
namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("gcpress_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

TrainConfig tiny(TrainMode mode = TrainMode::kGC) {
  TrainConfig c;
  c.mode = mode;
  c.net.width_scale = 0.05;
  c.net.n_res = 1;
  c.crop = 32;
  c.synthetic_count = 6;
  c.iterations = 3;
  c.seed = 21;
  return c;
}

std::vector<TrainExample> examples(const TrainConfig& c, int n) {
  const Dataset ds = load_training_data(c);
  std::vector<TrainExample> out;
  for (int i = 0; i < n; ++i) out.push_back(make_example(ds[static_cast<std::size_t>(i)], 5));
  return out;
}

std::vector<std::vector<float>> snapshot(const std::vector<Param<float>>& ps) {
  std::vector<std::vector<float>> out;
  for (const auto& p : ps) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

std::vector<std::vector<float>> grads(const std::vector<Param<float>>& ps) {
  std::vector<std::vector<float>> out;
  for (const auto& p : ps) {
    if (p.tensor.has_grad()) out.emplace_back(p.tensor.grad().begin(), p.tensor.grad().end());
    else out.emplace_back(p.tensor.numel(), 0.0f);
  }
  return out;
}

// Eight disjoint 8x8 squares of alternating classes on a 64x32 frame.
LabelGrids eight_instances() {
  PolygonLabelMap map;
  map.objects.push_back({0, 0, {{0, 0}, {64, 0}, {64, 32}, {0, 32}}});
  for (int i = 0; i < 8; ++i) {
    const int x = (i % 4) * 16, y = (i / 4) * 16;
    map.objects.push_back({1 + i % 2, i + 1, {{x, y}, {x + 8, y}, {x + 8, y + 8}, {x, y + 8}}});
  }
  return rasterize_label_map(map, 64, 32);
}

TEST(Config, FormatParseRoundTrip) {
  TrainConfig c = tiny(TrainMode::kSCRandomBox);
  c.lr = 1.234e-4;
  c.net.centers = CenterSet({-1.5f, 0.0f, 0.75f}, 0.5f);
  c.net.encoder_spec = "c7s1-60, d120, d240, d480, d960, c3s1-C, q";
  c.gan_form = GeneratorGanForm::kLiteral;
  const std::string text = format_train_config(c);
  const TrainConfig back = parse_train_config(text);
  EXPECT_EQ(format_train_config(back), text);
  EXPECT_EQ(back.lr, c.lr);
  EXPECT_EQ(back.net.centers.values(), c.net.centers.values());
  EXPECT_EQ(back.mode, TrainMode::kSCRandomBox);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_train_config("nonsense=1"), ConfigError);
  EXPECT_THROW(parse_train_config("iterations=ten"), ConfigError);
  EXPECT_THROW(parse_train_config("iterations"), ConfigError);
  EXPECT_THROW(parse_train_config("mode=GAN"), ConfigError);
  EXPECT_THROW(parse_train_config("centers=1,0"), ConfigError);
  EXPECT_EQ(parse_train_config("# comment\n\n  iterations = 7  # trailing\n").iterations, 7);
  TrainConfig c;
  c.batch = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.crop = 40;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.weights.beta = 0.1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.mode = TrainMode::kSCRandomInstance;
  c.net.centers = CenterSet({-1.0f, 1.0f});
  EXPECT_THROW(c.validate(), ConfigError);  // SC zeroes codes, so 0 must be a center
}

TEST(RandomInstances, CountsAndEdgeCases) {
  std::mt19937_64 rng(1);
  PolygonLabelMap map;
  map.objects.push_back({0, 0, {{0, 0}, {32, 0}, {32, 32}, {0, 32}}});
  for (int i = 0; i < 4; ++i) map.objects.push_back({3, i + 1, {{i * 8, 0}, {i * 8 + 8, 0}, {i * 8 + 8, 8}, {i * 8, 8}}});
  const LabelGrids four = rasterize_label_map(map, 32, 32);
  ASSERT_EQ(list_instances(four).size(), 4u);
  for (int t = 0; t < 20; ++t) {
    const HeatmapSample s = sample_heatmap_ri(four, 16, rng);
    EXPECT_EQ(std::count(s.pixel_mask.begin(), s.pixel_mask.end(), 1), 64);  // one 8x8 instance
  }
  map.objects.resize(2);
  const LabelGrids one = rasterize_label_map(map, 32, 32);
  const HeatmapSample s1 = sample_heatmap_ri(one, 16, rng);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      EXPECT_EQ(s1.pixel_mask[static_cast<std::size_t>(y) * 32 + x], one.instance_at(x, y) == 1 ? 1 : 0);
  map.objects.resize(1);
  const HeatmapSample s0 = sample_heatmap_ri(rasterize_label_map(map, 32, 32), 16, rng);
  EXPECT_EQ(s0.heatmap.preserved(), 0u);
  EXPECT_EQ(s0.heatmap.cells.size(), 4u);
}

TEST(RandomInstances, UniformSelection) {
  const LabelGrids grids = eight_instances();
  const auto inst = list_instances(grids);
  ASSERT_EQ(inst.size(), 8u);
  std::mt19937_64 rng(2);
  std::vector<int> hits(8, 0);
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    const HeatmapSample s = sample_heatmap_ri(grids, 16, rng);
    for (std::size_t k = 0; k < inst.size(); ++k) {
      const int x = static_cast<int>(k % 4) * 16, y = static_cast<int>(k / 4) * 16;
      hits[k] += s.pixel_mask[static_cast<std::size_t>(y) * 64 + x];
    }
  }
  double chi2 = 0;
  const double expected = draws * 0.25;
  for (int h : hits) {
    EXPECT_NEAR(h / static_cast<double>(draws), 0.25, 0.02);
    chi2 += (h - expected) * (h - expected) / expected;
  }
  // Upper 1% point of chi-square with 7 degrees of freedom.
  EXPECT_LT(chi2, 18.475);
}

TEST(RandomBox, AreaAndPlacement) {
  std::mt19937_64 rng(3);
  double area = 0;
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    const HeatmapSample s = sample_heatmap_rb(64, 48, 16, rng);
    const auto kept = std::count(s.pixel_mask.begin(), s.pixel_mask.end(), 1);
    area += static_cast<double>(kept) / (64.0 * 48.0);
    EXPECT_EQ(s.heatmap, heatmap_from_pixel_mask(s.pixel_mask, 64, 48, 16));
  }
  EXPECT_NEAR(area / draws, 0.25, 0.03);
}

TEST(RandomBox, ForcedBoxes) {
  const HeatmapSample full = box_heatmap(64, 64, 16, 0, 0, 64, 64);
  EXPECT_EQ(full.heatmap.preserved(), 16u);
  const HeatmapSample clipped = box_heatmap(64, 64, 16, 60, 60, 100, 100);
  EXPECT_EQ(std::count(clipped.pixel_mask.begin(), clipped.pixel_mask.end(), 1), 16);
  EXPECT_EQ(clipped.heatmap.preserved(), 0u);
  const HeatmapSample dot = box_heatmap(64, 64, 16, 63, 63, 1, 1);
  EXPECT_EQ(std::count(dot.pixel_mask.begin(), dot.pixel_mask.end(), 1), 1);
  // Half of a 16x16 block is enough.
  EXPECT_EQ(box_heatmap(32, 32, 16, 0, 0, 8, 16).heatmap.at(0, 0), 1);
  EXPECT_EQ(box_heatmap(32, 32, 16, 0, 0, 7, 16).heatmap.at(0, 0), 0);
}

TEST(Trainer, StepIsDeterministic) {
  const TrainConfig c = tiny();
  const auto batch = examples(c, 1);
  Trainer a(c), b(c);
  for (int i = 0; i < 2; ++i) {
    const StepReport ra = a.step(batch), rb = b.step(batch);
    EXPECT_EQ(ra.d_loss, rb.d_loss);
    EXPECT_EQ(ra.total, rb.total);
    EXPECT_EQ(ra.fm, rb.fm);
  }
  EXPECT_EQ(snapshot(a.model().parameters()), snapshot(b.model().parameters()));
}

TEST(Trainer, StepUpdatesBothNetworks) {
  const TrainConfig c = tiny();
  Trainer t(c);
  const auto d0 = snapshot(t.model().d_parameters()), g0 = snapshot(t.model().eg_parameters());
  const StepReport r = t.step(examples(c, 1));
  EXPECT_NE(snapshot(t.model().d_parameters()), d0);
  EXPECT_NE(snapshot(t.model().eg_parameters()), g0);
  EXPECT_GT(r.d_loss, 0.0);
  EXPECT_GT(r.g_gan, 0.0);
  EXPECT_GT(r.fm, 0.0);
  EXPECT_NEAR(r.total, r.g_gan + 10 * r.distortion + 10 * r.fm, 1e-5 * r.total);
}

TEST(Trainer, MseBaselineLeavesDiscriminatorAlone) {
  const TrainConfig c = tiny(TrainMode::kMSEBaseline);
  Trainer t(c);
  const auto d0 = snapshot(t.model().d_parameters()), g0 = snapshot(t.model().eg_parameters());
  const StepReport r = t.step(examples(c, 1));
  EXPECT_EQ(snapshot(t.model().d_parameters()), d0);
  EXPECT_NE(snapshot(t.model().eg_parameters()), g0);
  EXPECT_EQ(r.d_loss, 0.0);
  EXPECT_EQ(r.g_gan, 0.0);
  EXPECT_EQ(r.fm, 0.0);
  EXPECT_NEAR(r.total, 10 * r.distortion, 1e-6 * r.total);
}

TEST(Trainer, BatchOfTwinsMatchesSingleExample) {
  TrainConfig c = tiny();
  const auto one = examples(c, 1);
  Trainer a(c);
  a.step(one);
  c.batch = 2;
  Trainer b(c);
  b.step({one[0], one[0]});
  const auto pa = snapshot(a.model().parameters()), pb = snapshot(b.model().parameters());
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (std::size_t j = 0; j < pa[i].size(); ++j) ASSERT_NEAR(pa[i][j], pb[i][j], 1e-6);
}

TEST(Trainer, DplusGeneratorIgnoresLabels) {
  const TrainConfig c = tiny(TrainMode::kGCDplus);
  Trainer t(c);
  const TrainExample with = examples(c, 1)[0];
  TrainExample without = with;
  without.semantics = Tensor();
  // D stays frozen and conditioned the same way; only the E/G input differs.
  t.zero_grad();
  t.generator_gradients(with, with.semantics);
  const auto g_with = grads(t.model().eg_parameters());
  t.zero_grad();
  t.generator_gradients(without, with.semantics);
  const auto g_without = grads(t.model().eg_parameters());
  EXPECT_EQ(g_with, g_without);
  double norm = 0;
  for (const auto& g : g_with)
    for (float v : g) norm += static_cast<double>(v) * v;
  EXPECT_GT(norm, 0.0);
  // Training itself needs the labels for D.
  EXPECT_THROW(t.step({without}), UsageError);
}

TEST(Trainer, ScAllOnesHeatmapMatchesUnmaskedStep) {
  const TrainConfig c = tiny(TrainMode::kSCRandomBox);
  const auto batch = examples(c, 1);
  const std::vector<HeatmapSample> ones{box_heatmap(32, 32, c.model_config().downsample, 0, 0, 32, 32)};
  Trainer masked(c), plain(c);
  plain.set_sc_masking(false);
  for (int i = 0; i < 2; ++i) {
    const StepReport a = masked.step(batch, &ones), b = plain.step(batch);
    EXPECT_EQ(a.d_loss, b.d_loss);
    EXPECT_EQ(a.distortion, b.distortion);
    EXPECT_EQ(a.total, b.total);
  }
  EXPECT_EQ(snapshot(masked.model().parameters()), snapshot(plain.model().parameters()));
}

TEST(Trainer, ScAllZerosHeatmapDropsDistortion) {
  const TrainConfig c = tiny(TrainMode::kSCRandomInstance);
  Trainer t(c);
  const auto ex = examples(c, 1)[0];
  const HeatmapSample zeros = box_heatmap(32, 32, c.model_config().downsample, 0, 0, 0, 0);
  const StepReport r = t.generator_gradients(ex, Tensor(), &zeros);
  EXPECT_EQ(r.distortion, 0.0);
  EXPECT_EQ(r.preserved, 0.0);
  EXPECT_GT(r.g_gan, 0.0);
  EXPECT_GT(r.fm, 0.0);
  // The code reaches nothing, so the encoder gets no gradient.
  for (const auto& p : t.model().eg_parameters())
    if (p.name.rfind("E.", 0) == 0 && p.tensor.has_grad())
      for (float g : p.tensor.grad()) ASSERT_EQ(g, 0.0f) << p.name;
}

TEST(Trainer, ScSamplesHeatmapsEachStep) {
  const TrainConfig c = tiny(TrainMode::kSCRandomInstance);
  Trainer t(c);
  const auto batch = examples(c, 1);
  for (int i = 0; i < 3; ++i) {
    const StepReport r = t.step(batch);
    EXPECT_GE(r.preserved, 0.0);
    EXPECT_LE(r.preserved, 1.0);
  }
}

TEST(TrainLoop, ReproducibleLogAndModelDir) {
  const TrainConfig c = tiny();
  const Dataset ds = load_training_data(c);
  TempDir a("loop_a"), b("loop_b");
  const TrainResult ra = train_loop(ds, c, {a.path, {}});
  train_loop(ds, c, {b.path, {}});
  EXPECT_EQ(ra.log.size(), 3u);
  const auto csv = read_file(a.path / "loss.csv");
  EXPECT_EQ(csv, read_file(b.path / "loss.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);  // header + one row per iteration
  EXPECT_EQ(read_file(a.path / "model.gcw"), read_file(b.path / "model.gcw"));

  const StoredModel loaded = load_model_dir(a.path);
  EXPECT_EQ(format_train_config(loaded.config), format_train_config(c));
  EXPECT_EQ(snapshot(loaded.model->parameters()), snapshot(ra.trainer->model().parameters()));

  auto weights = read_file(a.path / "model.gcw");
  weights[weights.size() / 2] ^= 0x40;
  write_file_atomic(a.path / "model.gcw", weights);
  EXPECT_THROW(load_model_dir(a.path), CorruptionError);
  EXPECT_THROW(load_model_dir(a.path / "missing"), UsageError);
}

TEST(TrainLoop, CheckpointsAtCadence) {
  TrainConfig c = tiny();
  c.iterations = 4;
  c.checkpoint_every = 2;
  TempDir dir("ckpt");
  train_loop(load_training_data(c), c, {dir.path, {}});
  EXPECT_TRUE(fs::exists(dir.path / "checkpoint_2.gcw"));
  EXPECT_FALSE(fs::exists(dir.path / "checkpoint_4.gcw"));
  EXPECT_TRUE(fs::exists(dir.path / "model.cfg"));
}

TEST(TrainLoop, EmptyDatasetAndNanSnapshot) {
  TrainConfig c = tiny();
  EXPECT_THROW(train_loop({}, c), UsageError);
  c.lr = 1e30;
  c.iterations = 20;
  TempDir dir("nan");
  EXPECT_THROW(train_loop(load_training_data(c), c, {dir.path, {}}), NumericalError);
  EXPECT_TRUE(fs::exists(dir.path / "nan_snapshot.gcw"));
  EXPECT_TRUE(fs::exists(dir.path / "nan_snapshot.txt"));
  EXPECT_FALSE(fs::exists(dir.path / "model.gcw"));
}

}  // namespace
}  // namespace gcpress
