#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "panolayout/tensor.hpp"

namespace panolayout {

// Named-tensor container. Layout:
//   8 bytes   magic "PANOCKP1"
//   u32       entry count
//   per entry u16 name length, name bytes, u8 ndim, u32 dims..., u64 offset
//   u64       payload size in bytes
//   payload   raw little-endian 8-byte doubles, entries at their offsets
void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, const nn::Tensor*>>& entries);

std::map<std::string, nn::Tensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace panolayout
