#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "uiwf/model.hpp"
#include "uiwf/trainer.hpp"

namespace uiwf {

// Checkpoint byte layout (all integers and floats little-endian):
//   char[8]  magic "UIWFCKPT"
//   u32      format version (1)
//   u64      config digest: FNV-1a 64 of the config JSON below
//   u64      config JSON length, followed by that many UTF-8 bytes
//   u32      tensor count
//   per tensor:
//     u32 name length, name bytes
//     u32 rank, u64 dims[rank]
//     f64 values[prod(dims)], row-major
inline constexpr char kCheckpointMagic[8] = {'U', 'I', 'W', 'F', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string checkpoint_bytes(const ModelParams& params);
ModelParams parse_checkpoint(const std::string& bytes);
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);
std::uint64_t config_digest(const ModelConfig& config);

// Keys mirror the TrainConfig fields; unknown keys are rejected. Values not
// present keep those of `defaults`.
nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig defaults = {});

}  // namespace uiwf
