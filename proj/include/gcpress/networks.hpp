#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gcpress/labelmap.hpp"
#include "gcpress/ops.hpp"
#include "gcpress/quantizer.hpp"

namespace gcpress {

// Layer-spec notation:
//   c7s1-k  7x7 conv, stride 1, instance norm, ReLU
//   dk      3x3 conv, stride 2, instance norm, ReLU
//   Rk      residual block of two 3x3 convs with k filters
//   uk      3x3 transposed conv, stride 2, instance norm, ReLU
//   c3s1-k  3x3 conv, stride 1, instance norm, ReLU
//   q       quantizer position (encoder only)
// "C" as a width stands for the bottleneck channel count. "Rk x n"
// (or "Rk×n") repeats a residual block n times.

enum class LayerKind { kC7s1, kDown, kResidual, kUp, kC3s1, kQuantize };

struct LayerToken {
  static constexpr int kBottleneck = -1;

  LayerKind kind = LayerKind::kC7s1;
  int width = 0;  // kBottleneck for "C", 0 for q
  bool operator==(const LayerToken&) const = default;
};

struct LayerSpec {
  std::vector<LayerToken> tokens;

  /// Index of the q token, or -1.
  int quantize_index() const;
  int count(LayerKind kind) const;
};

/// Throws ConfigError on unknown tokens, non-positive widths or repeated q.
LayerSpec parse_layer_spec(const std::string& text);
std::string format_layer_spec(const LayerSpec& spec);

std::string default_encoder_spec(bool semantic);
std::string default_generator_spec(int n_res);
std::string default_feature_spec();

struct NetConfig {
  double width_scale = 0.1;
  int channels = 2;  // C, never scaled
  int downsample = 16;
  int n_res = 3;
  int d_scales = 2;
  int d_layers = 3;  // strided layers per discriminator scale
  bool use_noise = false;
  int noise_dim = 0;
  int image_channels = 3;
  int num_classes = 0;
  bool semantic = false;        // SC: feature extractor + post-q tokens
  bool conditional_d = false;   // GC(D+): one-hot label map into D
  CenterSet centers;
  // Empty means the default string for the mode.
  std::string encoder_spec;
  std::string generator_spec;
  std::string feature_spec;

  /// ceil(width * width_scale), at least 1.
  int scaled(int width) const;
  std::string effective_encoder_spec() const;
  std::string effective_generator_spec() const;
  std::string effective_feature_spec() const;
  /// Image sides must be multiples of this: 2^(strided layers in the
  /// encoder spec, including those after q).
  int image_multiple() const;
  /// Throws ConfigError when the specs and settings are inconsistent.
  void validate() const;
};

/// One convolution of a network with its shape and the operations that follow it.
struct LayerPlan {
  std::string name;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int pad = 1;
  int output_pad = 0;
  bool transpose = false;
  bool bias = false;
  bool norm = true;
  Activation act = Activation::relu();
  bool has_act = true;
  bool residual_first = false;   // first conv of a residual block
  bool residual_second = false;  // second conv; its output adds the block input

  std::size_t parameter_count() const;
};

struct NetworkPlan {
  std::vector<LayerPlan> encoder;
  std::vector<LayerPlan> post;  // tokens after q, run on [w_hat, F(s)] before the generator
  std::vector<LayerPlan> feature;
  std::vector<LayerPlan> generator;
  std::vector<std::vector<LayerPlan>> discriminator;  // per scale
  int feature_channels = 0;

  std::size_t eg_parameter_count() const;  // encoder, post, feature, generator
  std::size_t d_parameter_count() const;
  std::size_t parameter_count() const { return eg_parameter_count() + d_parameter_count(); }
};

NetworkPlan plan_network(const NetConfig& cfg);

template <class T>
struct Param {
  std::string name;
  BasicTensor<T> tensor;
};

template <class T>
struct ConvLayer {
  LayerPlan plan;
  BasicTensor<T> weight;
  BasicTensor<T> bias;

  BasicTensor<T> conv(const BasicTensor<T>& x) const;
};

/// A chain of planned layers. forward() can record the output of every
/// layer that is not internal to a residual block.
template <class T>
class Stack {
 public:
  Stack() = default;
  Stack(const std::vector<LayerPlan>& plan, std::uint64_t& seed_state);

  BasicTensor<T> forward(const BasicTensor<T>& x, std::vector<BasicTensor<T>>* taps = nullptr) const;
  void collect(std::vector<Param<T>>& out) const;
  bool empty() const { return layers_.empty(); }
  int out_channels() const { return layers_.empty() ? 0 : layers_.back().plan.out_channels; }

 private:
  std::vector<ConvLayer<T>> layers_;
};

template <class T>
struct DiscriminatorOutput {
  std::vector<BasicTensor<T>> logits;                 // per scale
  std::vector<std::vector<BasicTensor<T>>> features;  // per scale, hidden activations
};

/// E, G, D and (SC) F with deterministic initialization from `seed`. The
/// float and double instantiations built from the same config and seed hold
/// identical values.
template <class T>
class GanModel {
 public:
  GanModel(NetConfig cfg, std::uint64_t seed);

  const NetConfig& config() const { return cfg_; }
  const NetworkPlan& plan() const { return plan_; }

  /// Unquantized latent w, 1 x C x H/s x W/s. H and W must be multiples of s.
  BasicTensor<T> encode(const BasicTensor<T>& x) const;
  /// Reconstruction from the (quantized) code. `semantics` is the one-hot
  /// label map at pixel resolution and is required exactly in SC mode;
  /// `noise` is required exactly when use_noise is set.
  BasicTensor<T> generate(const BasicTensor<T>& w_hat, const BasicTensor<T>& semantics = {},
                          const BasicTensor<T>& noise = {}) const;
  /// SC feature extractor output at code resolution.
  BasicTensor<T> extract_features(const BasicTensor<T>& semantics) const;
  /// Multi-scale patch discriminator. `semantics` is used only with conditional_d.
  DiscriminatorOutput<T> discriminate(const BasicTensor<T>& x, const BasicTensor<T>& semantics = {}) const;

  std::vector<Param<T>> eg_parameters() const;
  std::vector<Param<T>> d_parameters() const;
  std::vector<Param<T>> parameters() const;

 private:
  NetConfig cfg_;
  NetworkPlan plan_;
  Stack<T> encoder_, post_, feature_, generator_;
  std::vector<Stack<T>> discriminator_;
};

/// One-hot planes (1 x classes x H x W) of a class grid. Ids outside
/// [0, classes) throw ConfigError.
template <class T>
BasicTensor<T> one_hot(const LabelGrids& grids, int classes);

/// Unit-normal noise grid for use_noise models (1 x noise_dim x h x w).
Tensor noise_grid(int noise_dim, int height, int width, std::uint64_t seed);

extern template class GanModel<float>;
extern template class GanModel<double>;

}  // namespace gcpress
