#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "isa/trainer.hpp"

namespace isa {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (all integers little-endian):
//   "ISACKPT\0"  u32 version  u32 header_len  header (UTF-8 JSON)
//   u32 tensor_count, then per tensor:
//     u32 name_len  name  u8 dtype (4 = f32, 8 = f64)  u64 rows  u64 cols  payload
//   u64 FNV-1a checksum of every preceding byte
// The header records version, precision, H, D', stop mechanism, gamma, alpha
// and the full training configuration.
std::string serialize_checkpoint(const Model& model);
Model deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace isa
