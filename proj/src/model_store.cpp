#include "gcpress/model_store.hpp"

#include <sstream>

#include "gcpress/errors.hpp"

namespace gcpress {

std::vector<NamedParameter> named_parameters(const GanModel<float>& model) {
  std::vector<NamedParameter> out;
  for (auto& p : model.parameters()) out.push_back({p.name, p.tensor});
  return out;
}

void save_model_dir(const std::filesystem::path& dir, const TrainConfig& cfg, const GanModel<float>& model) {
  std::filesystem::create_directories(dir);
  const auto bytes = serialize_weights(named_parameters(model));
  write_file_atomic(dir / "model.gcw", bytes);
  write_text_atomic(dir / "model.cfg",
                    format_train_config(cfg) + "weights_crc32=" + std::to_string(crc32_of(bytes)) + "\n");
}

StoredModel load_model_dir(const std::filesystem::path& dir) {
  const auto cfg_path = dir / "model.cfg";
  const auto weights_path = dir / "model.gcw";
  if (!std::filesystem::exists(cfg_path) || !std::filesystem::exists(weights_path))
    throw UsageError("not a model directory (need model.cfg and model.gcw): " + dir.string());
  const auto cfg_bytes = read_file(cfg_path);
  std::istringstream in(std::string(cfg_bytes.begin(), cfg_bytes.end()));
  std::string line, body;
  long long crc = -1;
  while (std::getline(in, line)) {
    if (line.rfind("weights_crc32=", 0) == 0) {
      try {
        crc = std::stoll(line.substr(14));
      } catch (const std::exception&) {
        throw CorruptionError("model.cfg: bad weights_crc32");
      }
      continue;
    }
    body += line + "\n";
  }
  if (crc < 0) throw CorruptionError("model.cfg: missing weights_crc32");
  StoredModel out;
  out.config = parse_train_config(body);
  out.config.validate();
  const auto bytes = read_file(weights_path);
  if (crc32_of(bytes) != static_cast<std::uint32_t>(crc))
    throw CorruptionError("model.gcw: checksum mismatch with model.cfg");
  out.model = std::make_unique<GanModel<float>>(out.config.model_config(), out.config.seed);
  deserialize_weights(bytes, named_parameters(*out.model));
  return out;
}

}  // namespace gcpress
