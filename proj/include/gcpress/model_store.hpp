#pragma once

#include <filesystem>
#include <memory>

#include "gcpress/checkpoint.hpp"
#include "gcpress/config.hpp"
#include "gcpress/networks.hpp"

namespace gcpress {

std::vector<NamedParameter> named_parameters(const GanModel<float>& model);

struct StoredModel {
  TrainConfig config;
  std::unique_ptr<GanModel<float>> model;
};

/// Writes model.gcw and model.cfg (the training config plus weights_crc32)
/// into `dir`, creating it if needed.
void save_model_dir(const std::filesystem::path& dir, const TrainConfig& cfg, const GanModel<float>& model);
/// Throws UsageError when files are missing, CorruptionError on a checksum
/// or layout mismatch.
StoredModel load_model_dir(const std::filesystem::path& dir);

}  // namespace gcpress
