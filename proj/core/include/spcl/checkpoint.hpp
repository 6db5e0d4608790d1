#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spcl/net.hpp"

namespace spcl::net {

// Checkpoint layout, all integers little-endian:
//   "SPCK" | version u32
//   then, per tensor until end of file:
//   name_length u32 | name bytes | rank u32 | dims u32 x rank | payload f64 x prod(dims)
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const ModelParams& params);
ModelParams decode_checkpoint(const std::vector<std::uint8_t>& bytes, bool requires_grad = false);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path, bool requires_grad = false);

}  // namespace spcl::net
