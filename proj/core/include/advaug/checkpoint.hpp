#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "advaug/network.hpp"

namespace advaug {

// Checkpoint layout (all integers little-endian):
//
//   "AANM"                      4 bytes magic
//   version                     u32, currently 1
//   header length               u32
//   header                      UTF-8 JSON: {"config": {...ModelConfig...},
//                                "tensors": [{"name", "rows", "cols"}, ...]}
//   payload                     every tensor in header order, row-major,
//                               IEEE-754 binary64 little-endian

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Model& model, const std::filesystem::path& path);

/// Throws FormatError on a wrong magic or version, a malformed header, a
/// tensor list that does not match the config, or a truncated payload.
Model load_checkpoint(const std::filesystem::path& path);

/// In-memory variants of the above.
std::string serialize_checkpoint(const Model& model);
Model deserialize_checkpoint(std::string_view bytes);

/// Compact JSON object describing a ModelConfig (keys as in the struct).
std::string model_config_json(const ModelConfig& config);
ModelConfig model_config_from_json(std::string_view json);

}  // namespace advaug
