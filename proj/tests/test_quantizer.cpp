#include <gtest/gtest.h>

#include <random>

#include "gcpress/ops.hpp"
#include "gcpress/quantizer.hpp"
#include "support/gradcheck.hpp"

namespace gcpress {
namespace {

// Independent oracle: scan every center, keep the first strictly closer one.
int brute_force_nearest(double x, const std::vector<float>& centers) {
  int best = 0;
  double best_d = std::abs(x - static_cast<double>(centers[0]));
  for (std::size_t j = 1; j < centers.size(); ++j) {
    const double d = std::abs(x - static_cast<double>(centers[j]));
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

CenterSet random_centers(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(2, 9);
  std::uniform_real_distribution<float> gap(0.05f, 1.5f), start(-3.0f, 0.0f);
  std::vector<float> c{start(rng)};
  const int n = count(rng);
  while (static_cast<int>(c.size()) < n) c.push_back(c.back() + gap(rng));
  return CenterSet(c);
}

TEST(CenterSet, DefaultIsSymmetricFiveLevels) {
  const CenterSet c;
  EXPECT_EQ(c.values(), (std::vector<float>{-2, -1, 0, 1, 2}));
  EXPECT_EQ(c.sigma(), 1.0f);
  EXPECT_EQ(c.zero_index(), 2);
  EXPECT_THROW(CenterSet({-2, 1, 0, 1, 2}), ConfigError);
  EXPECT_THROW(CenterSet({1.0f}), ConfigError);
  EXPECT_THROW(CenterSet({0, 1}, 0.0f), ConfigError);
}

TEST(QuantizeHard, NearestCenter) {
  const CenterSet c;
  EXPECT_EQ(c.nearest(0.4), 2);
  EXPECT_EQ(c.nearest(1.6), 4);
  EXPECT_EQ(c.nearest(0.5), 2);  // midpoint tie goes low
  EXPECT_EQ(c.nearest(-7.0), 0);
  EXPECT_THROW(c.nearest(std::nan("")), NumericalError);
}

TEST(QuantizeHard, MatchesBruteForce) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  const CenterSet c;
  for (int i = 0; i < 100000; ++i) {
    const double x = static_cast<float>(dist(rng));
    ASSERT_EQ(c.nearest(x), brute_force_nearest(x, c.values())) << x;
  }
}

TEST(QuantizeHard, PropertiesOnRandomCenterSets) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const CenterSet c = random_centers(rng);
    std::uniform_real_distribution<float> dist(c[0] - 1.0f, c[c.size() - 1] + 1.0f);
    std::vector<float> xs(2000);
    for (auto& x : xs) x = dist(rng);
    std::sort(xs.begin(), xs.end());
    int prev = 0;
    for (float x : xs) {
      const int s = c.nearest(x);
      ASSERT_EQ(s, brute_force_nearest(x, c.values()));
      ASSERT_GE(s, prev);  // monotone
      prev = s;
      ASSERT_EQ(c.nearest(c[s]), s);  // idempotent through dequantize
    }
  }
}

TEST(Dequantize, RoundTripError) {
  std::mt19937_64 rng(3);
  const CenterSet c;
  auto w = testing::random_tensor<float>({1, 3, 4, 5}, rng, -2.0, 2.0);
  const auto code = quantize_hard(w, c);
  EXPECT_EQ(code.height, 4);
  EXPECT_EQ(code.width, 5);
  EXPECT_EQ(code.channels, 3);
  const auto back = dequantize(code);
  for (std::size_t i = 0; i < w.numel(); ++i) EXPECT_LE(std::abs(back.values()[i] - w.values()[i]), 0.5f);
  // Centers are fixed points.
  const auto fixed = dequantize(quantize_hard(back, c));
  EXPECT_EQ(fixed.values(), back.values());
  EXPECT_EQ(dequantize(quantize_hard(Tensor::zeros({1, 1, 1, 1}), c)).item(), 0.0f);
}

TEST(Dequantize, OutOfRangeSymbolIsCorruption) {
  CodeGrid code(1, 1, 1, CenterSet());
  code.symbols[0] = 5;
  EXPECT_THROW(dequantize(code), CorruptionError);
}

TEST(StraightThrough, ForwardIsHardBackwardIsSoft) {
  const CenterSet c;
  auto w = Tensor::from({1}, {0.4f}).set_requires_grad();
  Tape<float> tape;
  {
    RecordScope<float> scope(tape);
    const auto q = quantize_soft_st(w, c);
    EXPECT_EQ(q.item(), 0.0f);
    tape.backward(sum(q));
  }
  ASSERT_TRUE(w.has_grad());
  EXPECT_NE(w.grad()[0], 0.0f);
}

TEST(StraightThrough, OutputAlwaysInCenterSet) {
  std::mt19937_64 rng(4);
  const CenterSet c;
  const auto w = testing::random_tensor<float>({1, 2, 8, 8}, rng, -4, 4);
  const auto q = quantize_soft_st(w, c);
  for (float v : q.values())
    EXPECT_NE(std::find(c.values().begin(), c.values().end(), v), c.values().end());
}

TEST(SoftQuantizer, LargeSigmaApproachesHard) {
  const CenterSet sharp({-2, -1, 0, 1, 2}, 1e4f);
  EXPECT_NEAR(quantize_soft(Tensor64::from({1}, {0.4}), sharp).item(), 0.0, 1e-3);
}

TEST(SoftQuantizer, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const CenterSet c({-2, -1, 0, 1, 2}, 1.0f);
  for (int i = 0; i < 20; ++i) {
    auto w = testing::random_tensor({1, 2, 3, 3}, rng, -3, 3);
    const double err = testing::gradcheck([&](auto& in) { return sum(quantize_soft(in[0], c)); }, {w});
    EXPECT_LE(err, 1e-4);
    // The straight-through op carries exactly the soft derivative.
    auto w2 = w.clone().set_requires_grad();
    auto w3 = w.clone().set_requires_grad();
    Tape<double> tape;
    {
      RecordScope<double> scope(tape);
      tape.backward(sum(quantize_soft_st(w2, c)));
      tape.backward(sum(quantize_soft(w3, c)));
    }
    for (std::size_t k = 0; k < w.numel(); ++k) EXPECT_EQ(w2.grad()[k], w3.grad()[k]);
  }
}

}  // namespace
}  // namespace gcpress
