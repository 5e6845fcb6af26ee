#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "resmix/dataset_file.hpp"
#include "resmix/image.hpp"

namespace resmix::data {

// 8-bit RGB PNG with fixed encoder settings, so output bytes are stable.
std::vector<std::uint8_t> encode_png(const RgbImage& img);
RgbImage decode_png(std::span<const std::uint8_t> bytes);

RgbImage dataset_image(const Dataset& ds, std::size_t index);

// Writes sample_<index>.png per index and index.csv with columns
// index,label,objects (objects as "id@block" pairs joined by ';').
void export_png(const Dataset& ds, std::span<const std::size_t> indices,
                const std::filesystem::path& dir);

}  // namespace resmix::data
