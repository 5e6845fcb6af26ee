#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace resmix::data {

using Rgb = std::array<std::uint8_t, 3>;

// Single-channel 8-bit image, row-major.
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

  std::uint8_t& at(int y, int x) { return pixels[static_cast<std::size_t>(y * width + x)]; }
  std::uint8_t at(int y, int x) const { return pixels[static_cast<std::size_t>(y * width + x)]; }
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

// Three-channel 8-bit image stored planar (C x H x W), the dataset layout.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> planes;

  RgbImage() = default;
  RgbImage(int h, int w)
      : height(h), width(w), planes(3 * static_cast<std::size_t>(h) * static_cast<std::size_t>(w), 0) {}

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height) + static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
  Rgb pixel(int y, int x) const {
    return {planes[index(0, y, x)], planes[index(1, y, x)], planes[index(2, y, x)]};
  }
  void set(int y, int x, const Rgb& c) {
    for (int ch = 0; ch < 3; ++ch) planes[index(ch, y, x)] = c[static_cast<std::size_t>(ch)];
  }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// Fixed 10-entry categorical palette shared by both datasets.
const std::array<Rgb, 10>& palette();

// Rotates counter-clockwise (as displayed, y pointing down) about the pixel
// center ((W-1)/2, (H-1)/2). Each destination pixel is inverse-mapped and
// sampled bilinearly; source taps outside the image read 0.
GrayImage rotate_about_center(const GrayImage& img, double theta_degrees);

// Bilinear resampling to size x size, half-pixel centers (align_corners=false)
// with edge clamping.
GrayImage resize_bilinear(const GrayImage& img, int size);

// out[c] = round(gray * color[c] / 255), rounding halves up.
std::uint8_t modulate(std::uint8_t gray, std::uint8_t channel);
RgbImage colorize(const GrayImage& gray, const Rgb& color);

// Copies src into dst with its top-left corner at (y, x).
void paste(RgbImage& dst, const RgbImage& src, int y, int x);

}  // namespace resmix::data
