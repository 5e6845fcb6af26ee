#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "resmix/dataset_file.hpp"
#include "resmix/idx.hpp"
#include "resmix/image.hpp"

namespace resmix::data {

// One placed object. For MNIST digits `identity` is the digit value and
// `source_index` its index within the official file; for sprites `identity`
// is the sprite type id and `source_index` is -1.
struct ObjectMeta {
  int identity = 0;
  int block = 0;
  int offset_x = 0;  // within the block
  int offset_y = 0;
  int scale = 0;     // MNIST: side in pixels; Pentomino: replication factor
  int rotation = 0;  // degrees
  int color = 0;     // palette index
  int width = 0;     // placed bounding box in pixels
  int height = 0;
  int source_index = -1;

  nlohmann::json to_json() const;
  static ObjectMeta from_json(const nlohmann::json& j);
  friend bool operator==(const ObjectMeta&, const ObjectMeta&) = default;
};

struct SampleMeta {
  int label = 0;
  std::vector<ObjectMeta> objects;
};

// 1 iff both digits share parity.
int mnist_parity_label(int digit_a, int digit_b);
// 0 iff all sprite types are equal.
int pentomino_label(std::span<const int> types);

struct MnistParityGenConfig {
  std::array<std::uint32_t, 3> counts{30000, 5000, 5000};  // train, val, test
  int image_size = 64;
  int grid = 2;  // grid x grid blocks
  std::vector<int> scales{20, 22, 24, 26, 28};
  std::vector<int> rotations{0, 5, 10, 15, 20, 25, 30};
  std::uint64_t master_seed = 0;
  std::uint32_t val_pool_size = 10000;

  int block_size() const { return image_size / grid; }
  void validate() const;
  nlohmann::json to_json() const;
  static MnistParityGenConfig from_json(const nlohmann::json& j);
};

struct PentominoGenConfig {
  std::array<std::uint32_t, 3> counts{20000, 5000, 5000};
  int image_size = 64;
  int grid = 8;
  int num_sprites = 3;
  std::vector<int> rotations{0, 90, 180, 270};
  std::vector<int> scales{1, 2};
  std::uint64_t master_seed = 0;

  int block_size() const { return image_size / grid; }
  // Also checks every rotated and scaled sprite fits a block.
  void validate() const;
  nlohmann::json to_json() const;
  static PentominoGenConfig from_json(const nlohmann::json& j);
};

// Draws a label sequence with exactly floor(n/2) zeros and ceil(n/2) ones
// from a split-level stream.
std::vector<std::uint8_t> balanced_labels(std::size_t n, std::uint64_t seed);

// Renders one MNIST Parity sample given its metadata and the digit pool.
RgbImage render_mnist_parity(const MnistParityGenConfig& cfg, const MnistSource& pool,
                             const SampleMeta& meta);
// Renders one Pentomino sample from its metadata alone.
RgbImage render_pentomino(const PentominoGenConfig& cfg, const SampleMeta& meta);

// Each sample draws from its own stream keyed by (master_seed, dataset, split,
// index), so output does not depend on `threads`.
Dataset generate_mnist_parity(const MnistParityGenConfig& cfg, const MnistSource& pool,
                              std::uint32_t count, int threads = 1);
Dataset generate_pentomino(const PentominoGenConfig& cfg, Split split, std::uint32_t count,
                           int threads = 1);

}  // namespace resmix::data
