#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medgrad/model.hpp"

namespace medgrad {

// Versioned binary checkpoint:
//   magic "MGEC" | format_version u32 LE | config_len u32 LE | config JSON
//   | tensor_count u32 LE | per tensor: name_len u32 LE, name bytes,
//     rank u32 LE, dims u64 LE each, data as 32-bit LE floats
// The config JSON embeds the model config, the vocabulary and the class
// prompts, so a checkpoint is self-contained.

constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const ClipBundle& bundle);
ClipBundle deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

// write-to-temp + atomic rename; a failed write never leaves a partial file
void save_checkpoint(const ClipBundle& bundle, const std::string& path);
ClipBundle load_checkpoint(const std::string& path);

}  // namespace medgrad
