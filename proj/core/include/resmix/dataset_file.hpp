#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace resmix::data {

inline constexpr char kDatasetMagic[4] = {'R', 'M', 'X', 'D'};
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 24;

// Generated images with labels and the per-sample generation record.
//
// Binary layout, little-endian:
//   "RMXD" | u32 version | u32 n | u32 c | u32 h | u32 w
//   n label bytes | n*c*h*w image bytes (sample-major, C x H x W)
// The JSON sidecar <stem>.meta.json carries the config echo and per-sample
// object metadata.
struct Dataset {
  std::uint32_t channels = 3;
  std::uint32_t height = 64;
  std::uint32_t width = 64;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint8_t> images;
  nlohmann::json meta;  // sidecar document

  std::size_t size() const { return labels.size(); }
  std::size_t image_bytes() const {
    return static_cast<std::size_t>(channels) * height * width;
  }
  std::span<const std::uint8_t> image(std::size_t i) const {
    return std::span<const std::uint8_t>(images).subspan(i * image_bytes(), image_bytes());
  }
  std::span<std::uint8_t> image(std::size_t i) {
    return std::span<std::uint8_t>(images).subspan(i * image_bytes(), image_bytes());
  }

  // First `count` samples, metadata trimmed to match.
  Dataset head(std::size_t count) const;
};

std::vector<std::uint8_t> encode_dataset(const Dataset& ds);
// Validates magic, version and exact length; FormatError otherwise.
Dataset decode_dataset(std::span<const std::uint8_t> bytes);

std::filesystem::path sidecar_path(const std::filesystem::path& dataset_path);

// Writes the binary file and, when ds.meta is non-null, its sidecar.
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
// Reads the binary file and the sidecar if present (meta stays null otherwise).
Dataset read_dataset(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace resmix::data
