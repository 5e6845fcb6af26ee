#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "resmix/nn.hpp"

namespace resmix {

// Binary layout, little-endian:
//   "RMXC" | u32 version = 1 | u32 header length | JSON header |
//   f32 blobs in header order (values, momentum buffers, running stats)
// The header echoes the model config, the epoch, the seed and free-form
// training state.
struct CheckpointInfo {
  nn::ModelConfig model;
  int epoch = -1;  // last completed epoch
  std::uint64_t seed = 0;
  nlohmann::json state = nlohmann::json::object();
};

std::vector<std::uint8_t> encode_checkpoint(const nn::Network<float>& net, const CheckpointInfo& info);

struct LoadedCheckpoint {
  CheckpointInfo info;
  std::unique_ptr<nn::Network<float>> net;
};

LoadedCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const nn::Network<float>& net,
                     const CheckpointInfo& info);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace resmix
