#pragma once

#include <filesystem>

#include <json.hpp>

#include "sphnn/model.hpp"

namespace sphnn {

struct Checkpoint {
  ModelParams params;
  /// manifest.json contents; callers add their own keys under "run".
  nlohmann::json manifest;
};

/// Writes `manifest.json` plus one `<parameter name>.bin` per tensor holding
/// rows·cols little-endian float64 values in row-major order. `run` is stored
/// verbatim under the manifest's "run" key.
void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params,
                     const ModelConfig& cfg, std::uint64_t seed, const nlohmann::json& run);

/// Reads a checkpoint written by save_checkpoint. Throws DataError on missing
/// files or shape mismatches.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace sphnn
