#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gcpress/networks.hpp"
#include "gcpress/objectives.hpp"
#include "support/gradcheck.hpp"

namespace gcpress {
namespace {

using testing::gradcheck;
using testing::random_tensor;

std::vector<Tensor64> maps(std::initializer_list<double> values) {
  std::vector<Tensor64> out;
  for (double v : values) out.push_back(Tensor64::full({1, 1, 3, 3}, v));
  return out;
}

TEST(LsganD, Examples) {
  EXPECT_DOUBLE_EQ(lsgan_d_loss(maps({1, 1}), maps({0, 0})).item(), 0.0);
  EXPECT_DOUBLE_EQ(lsgan_d_loss(maps({0, 0}), maps({1, 1})).item(), 2.0);
  EXPECT_DOUBLE_EQ(lsgan_d_loss(maps({0.5}), maps({0.5})).item(), 0.5);
  EXPECT_THROW(lsgan_d_loss(maps({1}), maps({0, 0})), UsageError);
}

TEST(LsganD, NonNegativeWithEqualityOnlyAtOptimum) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    std::vector<Tensor64> r{random_tensor({1, 1, 4, 4}, rng, -2, 2)}, f{random_tensor({1, 1, 4, 4}, rng, -2, 2)};
    EXPECT_GT(lsgan_d_loss(r, f).item(), 0.0);
  }
}

TEST(LsganG, Examples) {
  EXPECT_DOUBLE_EQ(lsgan_g_loss(maps({1, 1})).item(), 0.0);
  EXPECT_DOUBLE_EQ(lsgan_g_loss(maps({0})).item(), 1.0);
  EXPECT_DOUBLE_EQ(lsgan_g_loss(maps({0}), GeneratorGanForm::kLiteral).item(), 0.0);
  EXPECT_DOUBLE_EQ(lsgan_g_loss(maps({1}), GeneratorGanForm::kLiteral).item(), 1.0);
  // d/dy (y - 1)^2 at 0.5 is -1 per element before averaging.
  auto d = Tensor64::full({1, 1, 2, 2}, 0.5).set_requires_grad();
  Tape<double> tape;
  {
    RecordScope<double> scope(tape);
    tape.backward(lsgan_g_loss<double>({d}));
  }
  for (double g : d.grad()) EXPECT_DOUBLE_EQ(g * 4, -1.0);
}

TEST(Distortion, Examples) {
  std::mt19937_64 rng(2);
  const auto x = random_tensor({1, 3, 8, 8}, rng);
  EXPECT_EQ(distortion_mse(x, x).item(), 0.0);
  auto shifted = x.clone();
  for (auto& v : shifted.values()) v += 0.1;
  EXPECT_NEAR(distortion_mse(x, shifted).item(), 0.01, 1e-12);
  EXPECT_THROW(distortion_mse(x, Tensor64::zeros({1, 3, 8, 7})), UsageError);

  const auto y = random_tensor({1, 3, 8, 8}, rng);
  EXPECT_EQ(masked_distortion(x, y, Tensor64::full({1, 1, 8, 8}, 1.0)).item(), distortion_mse(x, y).item());
  EXPECT_EQ(masked_distortion(x, y, Tensor64::zeros({1, 1, 8, 8})).item(), 0.0);
  // Error confined to the right half, mask keeps the left half.
  auto z = x.clone();
  auto half = Tensor64::zeros({1, 1, 8, 8});
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 8; ++r)
      for (int col = 0; col < 8; ++col) {
        if (col >= 4) z.at({0, c, r, col}) += 0.7;
        else half.at({0, 0, r, col}) = 1.0;
      }
  EXPECT_EQ(masked_distortion(x, z, half).item(), 0.0);
  EXPECT_GT(distortion_mse(x, z).item(), 0.0);
}

TEST(FeatureMatching, Examples) {
  std::mt19937_64 rng(3);
  std::vector<std::vector<Tensor64>> a{{random_tensor({1, 2, 3, 3}, rng), random_tensor({1, 4, 2, 2}, rng)},
                                       {random_tensor({1, 2, 2, 2}, rng)}};
  EXPECT_EQ(feature_matching_loss(a, a).item(), 0.0);
  auto b = a;
  for (auto& scale : b)
    for (auto& t : scale) {
      t = t.clone();
      for (auto& v : t.values()) v += 1.0;
    }
  EXPECT_NEAR(feature_matching_loss(a, b).item(), 1.0, 1e-12);
  auto short_b = b;
  short_b[0].pop_back();
  EXPECT_THROW(feature_matching_loss(a, short_b), UsageError);
}

TEST(FeatureMatching, RealBranchGetsNoGradient) {
  std::mt19937_64 rng(4);
  auto real = random_tensor({1, 2, 3, 3}, rng).set_requires_grad();
  auto fake = random_tensor({1, 2, 3, 3}, rng).set_requires_grad();
  Tape<double> tape;
  {
    RecordScope<double> scope(tape);
    tape.backward(feature_matching_loss<double>({{real}}, {{fake}}));
  }
  EXPECT_FALSE(real.has_grad());
  EXPECT_TRUE(fake.has_grad());
}

TEST(GeneratorTotal, WeightedSum) {
  LossWeights w;
  GeneratorLosses<double> l{Tensor64::scalar(0), Tensor64::scalar(0), Tensor64::scalar(0)};
  EXPECT_EQ(gc_generator_total(l, w).item(), 0.0);
  l = {Tensor64::scalar(1.0), Tensor64::scalar(0.01), Tensor64::scalar(0.0)};
  EXPECT_NEAR(gc_generator_total(l, w).item(), 1.1, 1e-12);
  l.fm = Tensor64::scalar(std::nan(""));
  try {
    gc_generator_total(l, w);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("fm"), std::string::npos);
  }
  LossWeights bad;
  bad.beta = 0.5;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(LossGradients, MatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    auto r1 = random_tensor({1, 1, 3, 4}, rng, -2, 2), r2 = random_tensor({1, 1, 2, 2}, rng, -2, 2);
    auto f1 = random_tensor({1, 1, 3, 4}, rng, -2, 2), f2 = random_tensor({1, 1, 2, 2}, rng, -2, 2);
    EXPECT_LE(gradcheck([](auto& in) { return lsgan_d_loss<double>({in[0], in[1]}, {in[2], in[3]}); },
                        {r1, r2, f1, f2}),
              1e-4);
    for (auto form : {GeneratorGanForm::kNonSaturating, GeneratorGanForm::kLiteral})
      EXPECT_LE(gradcheck([form](auto& in) { return lsgan_g_loss<double>({in[0], in[1]}, form); }, {f1, f2}), 1e-4);

    auto x = random_tensor({1, 3, 4, 5}, rng), y = random_tensor({1, 3, 4, 5}, rng);
    EXPECT_LE(gradcheck([](auto& in) { return distortion_mse(in[0], in[1]); }, {x, y}), 1e-4);
    auto mask = Tensor64::zeros({1, 1, 4, 5});
    for (auto& m : mask.values()) m = static_cast<double>(rng() % 2);
    EXPECT_LE(gradcheck([&](auto& in) { return masked_distortion(in[0], in[1], mask); }, {x, y}), 1e-4);

    // Keep |fake - real| away from the kink of |.|.
    auto real = random_tensor({1, 2, 3, 3}, rng);
    auto fake = real.clone();
    const auto offset = testing::random_tensor_away_from_zero({1, 2, 3, 3}, rng);
    for (std::size_t k = 0; k < fake.numel(); ++k) fake.values()[k] += offset.values()[k];
    auto real2 = random_tensor({1, 3, 2, 2}, rng);
    auto fake2 = real2.clone();
    const auto offset2 = testing::random_tensor_away_from_zero({1, 3, 2, 2}, rng);
    for (std::size_t k = 0; k < fake2.numel(); ++k) fake2.values()[k] += offset2.values()[k];
    EXPECT_LE(gradcheck([&](auto& in) { return feature_matching_loss<double>({{real, real2}}, {{in[0], in[1]}}); },
                        {fake, fake2}),
              1e-4);

    auto g = Tensor64::scalar(rng() % 100 / 50.0), d = Tensor64::scalar(rng() % 100 / 50.0),
         fm = Tensor64::scalar(rng() % 100 / 50.0);
    EXPECT_LE(gradcheck([](auto& in) { return gc_generator_total<double>({in[0], in[1], in[2]}, LossWeights{}); },
                        {g, d, fm}),
              1e-4);
  }
}

// Linear discriminator D(x) = a x + b on scalar samples: two real points and
// two fake points. The loss is quadratic in (a, b), so the minimizer follows
// from three recorded gradients; compare with the normal equations.
TEST(LsganD, LinearDiscriminatorMatchesClosedForm) {
  const std::vector<double> xr{0.7, 1.9}, xf{-0.4, 0.3};
  auto grad_at = [&](double a, double b) {
    auto w = Tensor64::from({1, 1, 1, 1}, {a}).set_requires_grad();
    auto bias = Tensor64::from({1}, {b}).set_requires_grad();
    Tape<double> tape;
    {
      RecordScope<double> scope(tape);
      const auto dr = conv2d(Tensor64::from({1, 1, 1, 2}, {xr[0], xr[1]}), w, bias, 1, 0);
      const auto df = conv2d(Tensor64::from({1, 1, 1, 2}, {xf[0], xf[1]}), w, bias, 1, 0);
      tape.backward(lsgan_d_loss<double>({dr}, {df}));
    }
    return std::array<double, 2>{w.grad()[0], bias.grad()[0]};
  };
  const auto g0 = grad_at(0, 0), ga = grad_at(1, 0), gb = grad_at(0, 1);
  // grad(theta) = H theta + g0
  const double h00 = ga[0] - g0[0], h10 = ga[1] - g0[1], h01 = gb[0] - g0[0], h11 = gb[1] - g0[1];
  const double det = h00 * h11 - h01 * h10;
  const double a = (-g0[0] * h11 + g0[1] * h01) / det;
  const double b = (-g0[1] * h00 + g0[0] * h10) / det;

  // Least squares of targets (1, 1, 0, 0) on [x, 1].
  const std::vector<double> xs{xr[0], xr[1], xf[0], xf[1]}, ts{1, 1, 0, 0};
  double sx = 0, sxx = 0, st = 0, sxt = 0;
  for (int i = 0; i < 4; ++i) {
    sx += xs[i];
    sxx += xs[i] * xs[i];
    st += ts[i];
    sxt += xs[i] * ts[i];
  }
  const double a_ref = (4 * sxt - sx * st) / (4 * sxx - sx * sx);
  const double b_ref = (st - a_ref * sx) / 4;
  EXPECT_NEAR(a, a_ref, 1e-10);
  EXPECT_NEAR(b, b_ref, 1e-10);
  const auto g = grad_at(a, b);
  EXPECT_NEAR(g[0], 0.0, 1e-10);
  EXPECT_NEAR(g[1], 0.0, 1e-10);
}

NetConfig tiny_config() {
  NetConfig cfg;
  cfg.width_scale = 0.03;
  cfg.channels = 2;
  cfg.n_res = 1;
  return cfg;
}

TEST(GeneratorTotal, GradientOnTinyModel) {
  const GanModel<double> model(tiny_config(), 11);
  std::mt19937_64 rng(12);
  const auto x = random_tensor({1, 3, 32, 32}, rng);
  // A random center grid; an all-zero code would put the discriminator's
  // first leaky ReLU exactly on its kink.
  auto code = Tensor64::zeros({1, 2, 2, 2});
  for (auto& v : code.values()) v = static_cast<double>(rng() % 5) - 2.0;
  auto component_loss = [&](int which) {
    return [&, which](auto&) {
      const auto x_hat = model.generate(code);
      const auto fake = model.discriminate(x_hat);
      DiscriminatorOutput<double> real;
      {
        NoRecordScope<double> off;
        real = model.discriminate(x);
      }
      GeneratorLosses<double> l{lsgan_g_loss(fake.logits), distortion_mse(x, x_hat),
                                feature_matching_loss(real.features, fake.features)};
      if (which == 0) return gc_generator_total(l, LossWeights{});
      return which == 1 ? l.gan : which == 2 ? l.distortion : l.fm;
    };
  };
  const auto params = model.eg_parameters();
  std::vector<Tensor64> probe{params.back().tensor, params[params.size() - 2].tensor};
  EXPECT_LE(gradcheck(component_loss(0), probe, 1e-6), 1e-4);

  // The recorded gradient of the total equals the weighted component gradients.
  auto grads = [&](int which) {
    for (auto& p : model.parameters()) p.tensor.zero_grad();
    Tape<double> tape;
    {
      RecordScope<double> scope(tape);
      std::vector<Tensor64> unused;
      tape.backward(component_loss(which)(unused));
    }
    return std::vector<double>(probe[1].grad().begin(), probe[1].grad().end());
  };
  const auto total = grads(0), gan = grads(1), dist = grads(2), fm = grads(3);
  for (std::size_t i = 0; i < total.size(); ++i)
    EXPECT_NEAR(total[i], gan[i] + 10 * dist[i] + 10 * fm[i], 1e-10 * (1 + std::abs(total[i])));
}

TEST(GeneratorTotal, GradientReachesEncoderThroughQuantizer) {
  NetConfig cfg;
  cfg.channels = 4;
  const GanModel<float> model(cfg, 13);
  std::mt19937_64 rng(14);
  const auto x = random_tensor<float>({1, 3, 64, 64}, rng);
  Tape<float> tape;
  {
    RecordScope<float> scope(tape);
    const auto x_hat = model.generate(quantize_soft_st(model.encode(x), cfg.centers));
    const auto fake = model.discriminate(x_hat);
    DiscriminatorOutput<float> real;
    {
      NoRecordScope<float> off;
      real = model.discriminate(x);
    }
    GeneratorLosses<float> l{lsgan_g_loss(fake.logits), distortion_mse(x, x_hat),
                             feature_matching_loss(real.features, fake.features)};
    tape.backward(gc_generator_total(l, LossWeights{}));
  }
  for (const auto& p : model.eg_parameters()) {
    if (p.name.rfind("E.", 0) != 0) continue;
    ASSERT_TRUE(p.tensor.has_grad()) << p.name;
    double norm = 0;
    for (float g : p.tensor.grad()) norm += static_cast<double>(g) * g;
    EXPECT_GT(norm, 0.0) << p.name;
  }
}

}  // namespace
}  // namespace gcpress
