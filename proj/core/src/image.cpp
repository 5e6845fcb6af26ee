#include "resmix/image.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "resmix/error.hpp"

namespace resmix::data {

const std::array<Rgb, 10>& palette() {
  // Tableau 10.
  static const std::array<Rgb, 10> colors = {{
      {31, 119, 180},
      {255, 127, 14},
      {44, 160, 44},
      {214, 39, 40},
      {148, 103, 189},
      {140, 86, 75},
      {227, 119, 194},
      {127, 127, 127},
      {188, 189, 34},
      {23, 190, 207},
  }};
  return colors;
}

namespace {

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

}  // namespace

GrayImage rotate_about_center(const GrayImage& img, double theta_degrees) {
  const double theta = theta_degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const double cy = (img.height - 1) / 2.0, cx = (img.width - 1) / 2.0;
  auto tap = [&](int y, int x) -> double {
    if (y < 0 || y >= img.height || x < 0 || x >= img.width) return 0.0;
    return img.at(y, x);
  };
  GrayImage out(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double sx = c * dx - s * dy + cx;
      const double sy = s * dx + c * dy + cy;
      const double fx = std::floor(sx), fy = std::floor(sy);
      const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
      const double ax = sx - fx, ay = sy - fy;
      const double v = (1 - ay) * ((1 - ax) * tap(y0, x0) + ax * tap(y0, x0 + 1)) +
                       ay * ((1 - ax) * tap(y0 + 1, x0) + ax * tap(y0 + 1, x0 + 1));
      out.at(y, x) = to_u8(v);
    }
  }
  return out;
}

GrayImage resize_bilinear(const GrayImage& img, int size) {
  if (size < 1) throw ValidationError("resize target must be >= 1, got " + std::to_string(size));
  GrayImage out(size, size);
  const double sy_scale = static_cast<double>(img.height) / size;
  const double sx_scale = static_cast<double>(img.width) / size;
  for (int y = 0; y < size; ++y) {
    const double sy = std::clamp((y + 0.5) * sy_scale - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double ay = sy - y0;
    for (int x = 0; x < size; ++x) {
      const double sx = std::clamp((x + 0.5) * sx_scale - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double ax = sx - x0;
      const double v = (1 - ay) * ((1 - ax) * img.at(y0, x0) + ax * img.at(y0, x1)) +
                       ay * ((1 - ax) * img.at(y1, x0) + ax * img.at(y1, x1));
      out.at(y, x) = to_u8(v);
    }
  }
  return out;
}

std::uint8_t modulate(std::uint8_t gray, std::uint8_t channel) {
  return static_cast<std::uint8_t>((2u * gray * channel + 255u) / 510u);
}

RgbImage colorize(const GrayImage& gray, const Rgb& color) {
  RgbImage out(gray.height, gray.width);
  for (int y = 0; y < gray.height; ++y)
    for (int x = 0; x < gray.width; ++x) {
      const std::uint8_t g = gray.at(y, x);
      out.set(y, x, {modulate(g, color[0]), modulate(g, color[1]), modulate(g, color[2])});
    }
  return out;
}

void paste(RgbImage& dst, const RgbImage& src, int y, int x) {
  if (y < 0 || x < 0 || y + src.height > dst.height || x + src.width > dst.width) {
    throw ShapeError("paste: " + std::to_string(src.height) + "x" + std::to_string(src.width) +
                     " at (" + std::to_string(y) + "," + std::to_string(x) + ") leaves the " +
                     std::to_string(dst.height) + "x" + std::to_string(dst.width) + " canvas");
  }
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < src.height; ++r)
      std::copy_n(&src.planes[src.index(c, r, 0)], src.width, &dst.planes[dst.index(c, y + r, x)]);
}

}  // namespace resmix::data
