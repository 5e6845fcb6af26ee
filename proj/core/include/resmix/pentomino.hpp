#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace resmix::data {

// Binary cell mask of one pentomino, row-major.
struct SpriteMask {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> cells;

  bool at(int r, int c) const { return cells[static_cast<std::size_t>(r * cols + c)] != 0; }
  friend bool operator==(const SpriteMask&, const SpriteMask&) = default;
};

inline constexpr int kNumSpriteTypes = 10;

// Type names in id order: F L N P T U V W Y Z.
std::string_view sprite_name(int type);
int sprite_type(std::string_view name);

// Canonical mask of a sprite type, each within a 4x4 cell box.
const SpriteMask& sprite_mask(int type);

// Exact 90-degree clockwise rotations, applied quarter_turns times.
SpriteMask rotate_quarter(const SpriteMask& mask, int quarter_turns);

// Integer pixel replication.
SpriteMask upscale(const SpriteMask& mask, int factor);

}  // namespace resmix::data
