#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "fpu/models/model.hpp"

namespace fpu::models {

// Binary checkpoint layout (all integers little-endian):
//   magic    8 bytes  "FPUCKPT\0"
//   version  u32      kCheckpointVersion
//   config   u64 length + UTF-8 JSON object (see config_to_json)
//   count    u32 number of parameter arrays
//   per array: u32 name length, name bytes, u32 rank, rank x u64 dims,
//              numel x IEEE-754 binary64 values
// Values are stored bit-for-bit, so write/read round trips are exact.
inline constexpr std::uint32_t kCheckpointVersion = 1;

nlohmann::json config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace fpu::models
