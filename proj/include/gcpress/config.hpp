#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gcpress/networks.hpp"
#include "gcpress/objectives.hpp"

namespace gcpress {

enum class TrainMode { kGC, kGCDplus, kSCRandomInstance, kSCRandomBox, kMSEBaseline };

/// "GC", "GC_Dplus", "SC_RI", "SC_RB", "MSE_baseline".
std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& text);
bool is_semantic(TrainMode mode);

enum class NormMode {
  kInstance,
  // Accepted for config compatibility. Instance norm keeps no running
  // statistics, so the halfway switch has nothing to freeze.
  kInstanceThenFixed,
};

struct TrainConfig {
  TrainMode mode = TrainMode::kGC;
  int iterations = 2000;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch = 1;
  std::uint64_t seed = 1;
  int checkpoint_every = 0;  // 0: only at the end
  NormMode norm_mode = NormMode::kInstance;
  LossWeights weights;
  GeneratorGanForm gan_form = GeneratorGanForm::kNonSaturating;
  double ri_fraction = 0.25;
  double rb_min = 0.25;  // box side range as a fraction of the frame
  double rb_max = 0.75;

  std::string data_dir;  // empty: synthetic corpus
  int synthetic_count = 512;
  int crop = 64;

  NetConfig net;

  TrainConfig();
  /// `net` with the mode's semantic / conditional flags applied.
  NetConfig model_config() const;
  /// Throws ConfigError.
  void validate() const;
};

/// Sets one field from its text form; unknown keys and malformed values
/// throw ConfigError.
void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value);

/// key=value lines over `base`; '#' starts a comment.
TrainConfig parse_train_config(const std::string& text, TrainConfig base = {});
TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});
/// Every field, one per line, in a form parse_train_config reads back exactly.
std::string format_train_config(const TrainConfig& cfg);

}  // namespace gcpress
