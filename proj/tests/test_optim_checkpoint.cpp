#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "gcpress/autograd.hpp"
#include "gcpress/checkpoint.hpp"
#include "gcpress/ops.hpp"
#include "gcpress/optim.hpp"

namespace gcpress {
namespace {

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  std::vector<float> p{0.3f, -1.2f}, g{0.0f, 0.0f}, m(2, 0.0f), v(2, 0.0f);
  adam_step<float>(p, g, m, v, AdamOptions{}, 1);
  EXPECT_EQ(p, (std::vector<float>{0.3f, -1.2f}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  for (double g0 : {-3.0, 0.01, 250.0}) {
    std::vector<double> p{1.0}, g{g0}, m(1, 0.0), v(1, 0.0);
    AdamOptions opt;
    opt.lr = 0.01;
    adam_step<double>(p, g, m, v, opt, 1);
    EXPECT_NEAR(1.0 - p[0], opt.lr * (g0 > 0 ? 1 : -1), 1e-6);
  }
  std::vector<double> p{1.0}, g{1.0}, m(1), v(1);
  EXPECT_THROW(adam_step<double>(p, g, m, v, AdamOptions{}, 0), UsageError);
}

TEST(Adam, DescendsQuadratic) {
  auto p = Tensor64::from({1}, {1.0}).set_requires_grad();
  AdamOptions opt;
  opt.lr = 0.1;
  opt.beta1 = 0.9;
  Adam<double> adam({p}, opt);
  for (int i = 0; i < 50; ++i) {
    Tape<double> tape;
    RecordScope<double> scope(tape);
    tape.backward(sum(square(p)));
    adam.step();
  }
  EXPECT_LT(std::abs(p.item()), 0.5);
}

TEST(Checkpoint, RoundTripAndValidation) {
  std::mt19937 rng(1);
  std::normal_distribution<float> dist;
  std::vector<NamedParameter> params;
  params.push_back({"enc.0.weight", Tensor::zeros({2, 3, 3, 3})});
  params.push_back({"enc.0.bias", Tensor::zeros({2})});
  for (auto& p : params)
    for (auto& v : p.tensor.data()) v = dist(rng);
  const auto bytes = serialize_weights(params);
  ASSERT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "GCW1");
  EXPECT_EQ(bytes[4], 1);

  std::vector<NamedParameter> loaded;
  loaded.push_back({"enc.0.weight", Tensor::zeros({2, 3, 3, 3})});
  loaded.push_back({"enc.0.bias", Tensor::zeros({2})});
  deserialize_weights(bytes, loaded);
  for (std::size_t i = 0; i < params.size(); ++i) EXPECT_EQ(params[i].tensor.values(), loaded[i].tensor.values());

  std::vector<NamedParameter> wrong_shape{{"enc.0.weight", Tensor::zeros({2, 3, 1, 1})},
                                          {"enc.0.bias", Tensor::zeros({2})}};
  EXPECT_THROW(deserialize_weights(bytes, wrong_shape), CorruptionError);
  std::vector<NamedParameter> wrong_name{{"dec.0.weight", Tensor::zeros({2, 3, 3, 3})},
                                         {"enc.0.bias", Tensor::zeros({2})}};
  EXPECT_THROW(deserialize_weights(bytes, wrong_name), CorruptionError);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(deserialize_weights(bad, loaded), FormatError);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(deserialize_weights(truncated, loaded), CorruptionError);
}

TEST(Checkpoint, AtomicWrite) {
  const auto dir = std::filesystem::temp_directory_path() / "gcpress_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "w.gcw";
  std::vector<NamedParameter> params{{"a", Tensor::full({3}, 2.5f)}};
  save_weights(path, params);
  EXPECT_TRUE(std::filesystem::exists(path));
  EXPECT_FALSE(std::filesystem::exists(dir / "w.gcw.tmp"));
  std::vector<NamedParameter> loaded{{"a", Tensor::zeros({3})}};
  load_weights(path, loaded);
  EXPECT_EQ(loaded[0].tensor.values(), params[0].tensor.values());
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace gcpress
