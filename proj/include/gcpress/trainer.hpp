#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "gcpress/config.hpp"
#include "gcpress/data.hpp"
#include "gcpress/heatmap.hpp"
#include "gcpress/networks.hpp"
#include "gcpress/optim.hpp"

namespace gcpress {

/// A preservation choice at pixel level and its code-resolution heatmap.
struct HeatmapSample {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixel_mask;  // row-major, 0/1
  Heatmap heatmap;
};

/// Distinct (class, instance) pairs with instance > 0, in first-seen raster order.
std::vector<std::pair<int, int>> list_instances(const LabelGrids& grids);

/// Preserves ceil(fraction * n) of the n instances, chosen uniformly without
/// replacement. No instances gives an all-zero heatmap.
HeatmapSample sample_heatmap_ri(const LabelGrids& grids, int block, std::mt19937_64& rng, double fraction = 0.25);

/// Box with sides uniform in [min_side, max_side] of the frame, placed
/// uniformly among the positions where it fits.
HeatmapSample sample_heatmap_rb(int width, int height, int block, std::mt19937_64& rng, double min_side = 0.25,
                                double max_side = 0.75);

/// Heatmap for an explicit box, clipped to the frame.
HeatmapSample box_heatmap(int width, int height, int block, int x0, int y0, int box_width, int box_height);

/// Heatmap preserving the listed (class, instance) pairs.
HeatmapSample instance_heatmap(const LabelGrids& grids, int block, const std::vector<std::pair<int, int>>& keep);

/// One training image prepared for the networks.
struct TrainExample {
  Tensor x;          // 1 x 3 x H x W in [-1, 1]
  Tensor semantics;  // one-hot label planes, undefined without labels
  std::optional<LabelGrids> grids;
};

TrainExample make_example(const Sample& sample, int num_classes);

struct StepReport {
  long long iteration = 0;
  double d_loss = 0;
  double g_gan = 0;
  double distortion = 0;
  double fm = 0;
  double total = 0;
  double preserved = 1.0;  // mean preserved code fraction (SC)
};

class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  const TrainConfig& config() const { return cfg_; }
  GanModel<float>& model() { return model_; }
  const GanModel<float>& model() const { return model_; }
  long long iteration() const { return iteration_; }

  /// One D update followed by one E/G update over the batch. `forced`
  /// replaces the sampled SC heatmaps (one per example).
  StepReport step(const std::vector<TrainExample>& batch, const std::vector<HeatmapSample>* forced = nullptr);

  /// Leaves d(total)/d(theta) of the E/G objective for one example in the
  /// parameter gradients without updating anything. `d_semantics`
  /// overrides what the discriminator is conditioned on.
  StepReport generator_gradients(const TrainExample& ex, const Tensor& d_semantics,
                                 const HeatmapSample* heatmap = nullptr);

  /// Off: SC runs without multiplying the code by the heatmap and with the
  /// plain MSE distortion.
  void set_sc_masking(bool on) { sc_masking_ = on; }
  void zero_grad();

 private:
  struct Forward;
  Forward forward(const TrainExample& ex, const HeatmapSample* heatmap);
  HeatmapSample draw_heatmap(const TrainExample& ex);
  Tensor d_conditioning(const TrainExample& ex) const;

  TrainConfig cfg_;
  NetConfig net_;
  GanModel<float> model_;
  Adam<float> adam_eg_;
  Adam<float> adam_d_;
  std::mt19937_64 heatmap_rng_;
  std::mt19937_64 noise_rng_;
  long long iteration_ = 0;
  bool sc_masking_ = true;
};

struct TrainOptions {
  std::filesystem::path out_dir;  // empty: nothing written
  std::function<void(const StepReport&)> on_step;
};

struct TrainResult {
  std::vector<StepReport> log;
  std::unique_ptr<Trainer> trainer;
};

/// Shuffled passes over `data` for cfg.iterations steps. Writes loss.csv,
/// periodic checkpoints and the final model directory into out_dir. On a
/// NumericalError the current weights go to nan_snapshot.gcw before the
/// error propagates.
TrainResult train_loop(const Dataset& data, const TrainConfig& cfg, const TrainOptions& options = {});

std::string loss_csv(const std::vector<StepReport>& log);

/// Synthetic corpus or folder ingest, as the config selects.
Dataset load_training_data(const TrainConfig& cfg);

}  // namespace gcpress
