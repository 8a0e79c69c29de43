#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "training/model.hpp"

namespace gwsm {

inline constexpr char kCheckpointMagic[4] = {'G', 'W', 'S', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// "GWSM", u32 version, u64 config length + `key = value` text, u32 record
// count, then per record: u32 name length, name, u32 rank, u64 dims, raw f64.
// All integers and floats little-endian.
std::vector<std::uint8_t> serialize_checkpoint(const Model& model);
Model deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::string& path, const Model& model);
// Throws DataError on missing files, bad magic, version mismatch or shape mismatch.
Model load_checkpoint(const std::string& path);

}  // namespace gwsm
