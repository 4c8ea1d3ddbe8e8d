#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "gcpress/networks.hpp"
#include "support/gradcheck.hpp"

namespace gcpress {
namespace {

NetConfig desk_gc(int channels = 2) {
  NetConfig cfg;
  cfg.channels = channels;
  return cfg;
}

NetConfig desk_sc(int classes = 5) {
  NetConfig cfg;
  cfg.semantic = true;
  cfg.downsample = 8;
  cfg.num_classes = classes;
  cfg.channels = 4;
  return cfg;
}

NetConfig paper_gc() {
  NetConfig cfg;
  cfg.width_scale = 1.0;
  cfg.n_res = 9;
  cfg.d_scales = 3;
  cfg.channels = 4;
  return cfg;
}

Tensor random_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return testing::random_tensor<float>({1, 3, h, w}, rng, -1, 1);
}

TEST(LayerSpecParser, Tokens) {
  const auto s = parse_layer_spec("c7s1-60, d120");
  ASSERT_EQ(s.tokens.size(), 2u);
  EXPECT_EQ(s.tokens[0], (LayerToken{LayerKind::kC7s1, 60}));
  EXPECT_EQ(s.tokens[1], (LayerToken{LayerKind::kDown, 120}));

  const auto enc = parse_layer_spec("c7s1-60, d120, d240, d480, d960, c3s1-C, q");
  EXPECT_EQ(enc.quantize_index(), 6);
  EXPECT_EQ(enc.tokens[5].width, LayerToken::kBottleneck);
  EXPECT_EQ(format_layer_spec(enc), "c7s1-60, d120, d240, d480, d960, c3s1-C, q");

  const auto gen = parse_layer_spec(
      "c3s1-960, R960, R960, R960, R960, R960, R960, R960, R960, R960, u480, u240, u120, u60, c7s1-3");
  EXPECT_EQ(gen.count(LayerKind::kResidual), 9);
  EXPECT_EQ(parse_layer_spec("R960x9").tokens, std::vector<LayerToken>(9, gen.tokens[1]));
  EXPECT_EQ(parse_layer_spec("R960×9").count(LayerKind::kResidual), 9);
  EXPECT_EQ(parse_layer_spec(default_generator_spec(9)).tokens, gen.tokens);
}

TEST(LayerSpecParser, Errors) {
  EXPECT_THROW(parse_layer_spec("x7s1-60"), ConfigError);
  EXPECT_THROW(parse_layer_spec("c7s1-0"), ConfigError);
  EXPECT_THROW(parse_layer_spec("d-5"), ConfigError);
  EXPECT_THROW(parse_layer_spec("c7s1-60, q, d10, q"), ConfigError);
  EXPECT_THROW(parse_layer_spec("c7s1-60,,d10"), ConfigError);
}

TEST(NetConfig, Validation) {
  EXPECT_NO_THROW(desk_gc().validate());
  EXPECT_NO_THROW(desk_sc().validate());
  auto wrong_s = desk_gc();
  wrong_s.downsample = 8;
  EXPECT_THROW(wrong_s.validate(), ConfigError);
  auto no_zero = desk_sc();
  no_zero.centers = CenterSet({-1.5f, -0.5f, 0.5f, 1.5f});
  EXPECT_THROW(no_zero.validate(), ConfigError);
  auto bad_res = desk_gc();
  bad_res.generator_spec = "c3s1-960, R480, u480, u240, u120, u60, c7s1-3";
  EXPECT_THROW(bad_res.validate(), ConfigError);
  auto no_q = desk_gc();
  no_q.encoder_spec = "c7s1-60, d120, d240, d480, d960, c3s1-C";
  EXPECT_THROW(no_q.validate(), ConfigError);
}

TEST(NetConfig, WidthScalingRoundsUpAndKeepsBottleneck) {
  const auto cfg = desk_gc(4);
  EXPECT_EQ(cfg.scaled(60), 6);
  EXPECT_EQ(cfg.scaled(64), 7);
  EXPECT_EQ(cfg.scaled(1), 1);
  const auto plan = plan_network(cfg);
  EXPECT_EQ(plan.encoder.back().out_channels, 4);
  EXPECT_EQ(plan.generator.front().in_channels, 4);
  EXPECT_EQ(plan.generator.back().out_channels, 3);
}

TEST(NetConfig, DeskModelIsMuchSmallerThanPaperScale) {
  const auto desk = plan_network(desk_gc(4));
  const auto paper = plan_network(paper_gc());
  EXPECT_LT(desk.parameter_count() * 50, paper.parameter_count());
  EXPECT_LT(desk.eg_parameter_count() * 50, paper.eg_parameter_count());
}

TEST(GanModel, ParameterCountMatchesPlan) {
  for (const auto& cfg : {desk_gc(), desk_sc()}) {
    const GanModel<float> model(cfg, 1);
    std::size_t n = 0;
    std::set<std::string> names;
    for (const auto& p : model.parameters()) {
      n += p.tensor.numel();
      EXPECT_TRUE(names.insert(p.name).second) << p.name;
    }
    EXPECT_EQ(n, model.plan().parameter_count());
  }
}

TEST(GanModel, FloatAndDoubleShareInitialization) {
  const GanModel<float> f(desk_gc(), 9);
  const GanModel<double> d(desk_gc(), 9);
  const auto pf = f.parameters();
  const auto pd = d.parameters();
  ASSERT_EQ(pf.size(), pd.size());
  for (std::size_t i = 0; i < pf.size(); ++i)
    for (std::size_t k = 0; k < pf[i].tensor.numel(); ++k)
      ASSERT_EQ(static_cast<double>(pf[i].tensor.values()[k]), pd[i].tensor.values()[k]);
}

TEST(Encoder, Shapes) {
  const GanModel<float> model(desk_gc(2), 1);
  NoRecordScope<float> off;
  EXPECT_EQ(model.encode(random_image(64, 64, 1)).shape(), (Shape{1, 2, 4, 4}));
  std::mt19937_64 rng(2);
  for (int i = 0; i < 5; ++i) {
    const int h = 16 * (1 + static_cast<int>(rng() % 4)), w = 16 * (1 + static_cast<int>(rng() % 4));
    const auto x = random_image(h, w, i);
    const auto code = model.encode(x);
    EXPECT_EQ(code.shape(), (Shape{1, 2, h / 16, w / 16}));
    EXPECT_EQ(model.generate(code).shape(), x.shape());
  }
  EXPECT_THROW(model.encode(random_image(64, 40, 1)), UsageError);
}

TEST(Encoder, CityscapesShape) {
  const GanModel<float> model(desk_gc(4), 1);
  NoRecordScope<float> off;
  EXPECT_EQ(model.encode(random_image(512, 1024, 3)).shape(), (Shape{1, 4, 32, 64}));
}

TEST(Generator, RangeAndDeterminism) {
  const GanModel<float> model(desk_gc(2), 3);
  NoRecordScope<float> off;
  const auto zero = Tensor::zeros({1, 2, 4, 4});
  const auto a = model.generate(zero);
  EXPECT_EQ(a.shape(), (Shape{1, 3, 64, 64}));
  for (float v : a.values()) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, -1.0f);
    EXPECT_LT(v, 1.0f);
  }
  EXPECT_EQ(model.generate(zero).values(), a.values());
  EXPECT_THROW(model.generate(Tensor::zeros({1, 3, 4, 4})), UsageError);
}

TEST(Generator, Noise) {
  auto cfg = desk_gc(2);
  cfg.use_noise = true;
  cfg.noise_dim = 2;
  const GanModel<float> model(cfg, 3);
  NoRecordScope<float> off;
  const auto code = Tensor::zeros({1, 2, 4, 4});
  EXPECT_THROW(model.generate(code), UsageError);
  const auto a = model.generate(code, {}, noise_grid(2, 4, 4, 1));
  const auto b = model.generate(code, {}, noise_grid(2, 4, 4, 2));
  EXPECT_NE(a.values(), b.values());
  EXPECT_EQ(model.plan().generator.front().in_channels, 4);
}

TEST(Discriminator, PyramidAndFeatures) {
  const GanModel<float> model(desk_gc(2), 4);
  NoRecordScope<float> off;
  const auto x = random_image(64, 64, 5);
  const auto out = model.discriminate(x);
  ASSERT_EQ(out.logits.size(), 2u);
  ASSERT_EQ(out.features.size(), 2u);
  EXPECT_EQ(out.features[0].size(), 4u);
  EXPECT_EQ(out.logits[0].dim(1), 1);
  // k4 s2 p2 three times, then two k4 s1 p2 layers: 64 -> 33 -> 17 -> 9 -> 10 -> 11.
  EXPECT_EQ(out.logits[0].shape(), (Shape{1, 1, 11, 11}));
  // 32 -> 17 -> 9 -> 5 -> 6 -> 7.
  EXPECT_EQ(out.logits[1].shape(), (Shape{1, 1, 7, 7}));
}

TEST(Discriminator, ConditioningChangesOnlyFirstLayer) {
  auto cond = desk_gc(2);
  cond.conditional_d = true;
  cond.num_classes = 5;
  const auto a = plan_network(desk_gc(2));
  const auto b = plan_network(cond);
  ASSERT_EQ(a.discriminator.size(), b.discriminator.size());
  for (std::size_t s = 0; s < a.discriminator.size(); ++s) {
    EXPECT_EQ(b.discriminator[s][0].in_channels, a.discriminator[s][0].in_channels + 5);
    for (std::size_t l = 1; l < a.discriminator[s].size(); ++l)
      EXPECT_EQ(a.discriminator[s][l].parameter_count(), b.discriminator[s][l].parameter_count());
  }
  EXPECT_EQ(a.eg_parameter_count(), b.eg_parameter_count());
}

TEST(GcDplus, EncoderAndGeneratorIgnoreSemantics) {
  auto cfg = desk_gc(2);
  cfg.conditional_d = true;
  cfg.num_classes = 5;
  const GanModel<float> model(cfg, 6);
  NoRecordScope<float> off;
  const auto x = random_image(64, 64, 7);
  LabelGrids grids{64, 64, std::vector<int>(64 * 64, 3), std::vector<int>(64 * 64, 0)};
  const auto s = one_hot<float>(grids, 5);
  const auto w = model.encode(x);
  EXPECT_EQ(model.generate(w, s).values(), model.generate(w).values());
  EXPECT_THROW(model.discriminate(x), UsageError);
  EXPECT_EQ(model.discriminate(x, s).logits.size(), 2u);
}

TEST(FeatureExtractor, ShapesAndConstantInput) {
  const GanModel<float> model(desk_sc(5), 8);
  NoRecordScope<float> off;
  const auto& plan = model.plan();
  EXPECT_EQ(plan.post.front().in_channels, 4 + plan.feature_channels);
  EXPECT_EQ(plan.feature_channels, desk_sc().scaled(480));

  LabelGrids grids{128, 128, std::vector<int>(128 * 128, 2), std::vector<int>(128 * 128, 0)};
  const auto s = one_hot<float>(grids, 5);
  const auto code = Tensor::zeros({1, 4, 16, 16});
  EXPECT_EQ(model.generate(code, s).shape(), (Shape{1, 3, 128, 128}));
  EXPECT_THROW(model.generate(code), UsageError);
  EXPECT_THROW(model.generate(code, one_hot<float>(grids, 3)), ConfigError);
  // One-hot of a class outside the model's range.
  EXPECT_THROW(one_hot<float>(grids, 2), ConfigError);
}

TEST(FeatureExtractor, ConstantMapGivesFlatInterior) {
  const GanModel<double> model(desk_sc(5), 8);
  NoRecordScope<double> off;
  LabelGrids grids{128, 128, std::vector<int>(128 * 128, 1), std::vector<int>(128 * 128, 0)};
  const auto f = model.extract_features(one_hot<double>(grids, 5));
  ASSERT_EQ(f.shape(), (Shape{1, model.plan().feature_channels, 16, 16}));
  // Zero padding only reaches about 10 pixels (two cells) into the field.
  for (int c = 0; c < f.dim(1); ++c)
    for (int y = 3; y < 13; ++y)
      for (int x = 3; x < 13; ++x) ASSERT_NEAR(f.at({0, c, y, x}), f.at({0, c, 8, 8}), 1e-9);
}

}  // namespace
}  // namespace gcpress
