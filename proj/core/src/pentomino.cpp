#include "resmix/pentomino.hpp"

#include <string>

#include "resmix/error.hpp"

namespace resmix::data {

namespace {

struct SpriteDef {
  std::string_view name;
  std::vector<std::string_view> rows;
};

// The twelve free pentominoes minus I (1x5, too long for an 8 px block at
// scale 2) and X; every mask fits a 4x4 cell box.
const std::vector<SpriteDef>& definitions() {
  static const std::vector<SpriteDef> defs = {
      {"F", {".##", "##.", ".#."}},
      {"L", {"#.", "#.", "#.", "##"}},
      {"N", {".#", ".#", "##", "#."}},
      {"P", {"##", "##", "#."}},
      {"T", {"###", ".#.", ".#."}},
      {"U", {"#.#", "###"}},
      {"V", {"#..", "#..", "###"}},
      {"W", {"#..", "##.", ".##"}},
      {"Y", {".#", "##", ".#", ".#"}},
      {"Z", {"##.", ".#.", ".##"}},
  };
  return defs;
}

std::vector<SpriteMask> build_masks() {
  std::vector<SpriteMask> masks;
  for (const auto& d : definitions()) {
    SpriteMask m;
    m.rows = static_cast<int>(d.rows.size());
    m.cols = static_cast<int>(d.rows.front().size());
    for (auto row : d.rows)
      for (char ch : row) m.cells.push_back(ch == '#' ? 1 : 0);
    masks.push_back(std::move(m));
  }
  return masks;
}

void check_type(int type) {
  if (type < 0 || type >= kNumSpriteTypes) {
    throw ValidationError("sprite type " + std::to_string(type) + " outside [0, " +
                          std::to_string(kNumSpriteTypes) + ")");
  }
}

}  // namespace

std::string_view sprite_name(int type) {
  check_type(type);
  return definitions()[static_cast<std::size_t>(type)].name;
}

int sprite_type(std::string_view name) {
  const auto& defs = definitions();
  for (std::size_t i = 0; i < defs.size(); ++i)
    if (defs[i].name == name) return static_cast<int>(i);
  throw ValidationError("unknown sprite '" + std::string(name) + "'");
}

const SpriteMask& sprite_mask(int type) {
  check_type(type);
  static const std::vector<SpriteMask> masks = build_masks();
  return masks[static_cast<std::size_t>(type)];
}

SpriteMask rotate_quarter(const SpriteMask& mask, int quarter_turns) {
  SpriteMask out = mask;
  for (int t = 0; t < ((quarter_turns % 4) + 4) % 4; ++t) {
    SpriteMask r;
    r.rows = out.cols;
    r.cols = out.rows;
    r.cells.assign(out.cells.size(), 0);
    // Clockwise: new(r, c) = old(rows - 1 - c, r).
    for (int y = 0; y < r.rows; ++y)
      for (int x = 0; x < r.cols; ++x)
        r.cells[static_cast<std::size_t>(y * r.cols + x)] = out.at(out.rows - 1 - x, y) ? 1 : 0;
    out = std::move(r);
  }
  return out;
}

SpriteMask upscale(const SpriteMask& mask, int factor) {
  if (factor < 1) throw ValidationError("sprite scale must be >= 1");
  SpriteMask out;
  out.rows = mask.rows * factor;
  out.cols = mask.cols * factor;
  out.cells.resize(static_cast<std::size_t>(out.rows * out.cols));
  for (int y = 0; y < out.rows; ++y)
    for (int x = 0; x < out.cols; ++x)
      out.cells[static_cast<std::size_t>(y * out.cols + x)] = mask.at(y / factor, x / factor) ? 1 : 0;
  return out;
}

}  // namespace resmix::data
