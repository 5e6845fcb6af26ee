#include "resmix/png_export.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include <png.h>

#include "resmix/error.hpp"

namespace resmix::data {

namespace {

void png_fail(png_structp png, png_const_charp msg) {
  *static_cast<std::string*>(png_get_error_ptr(png)) = msg;
  png_longjmp(png, 1);
}
void png_warn(png_structp, png_const_charp) {}

void append(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

struct Reader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

void consume(png_structp png, png_bytep data, png_size_t n) {
  auto* r = static_cast<Reader*>(png_get_io_ptr(png));
  if (r->pos + n > r->bytes.size()) png_error(png, "truncated stream");
  std::memcpy(data, r->bytes.data() + r->pos, n);
  r->pos += n;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
  std::vector<std::uint8_t> out;
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 3);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("png: " + err);
  }
  {
    png_set_write_fn(png, &out, append, nullptr);
    png_set_compression_level(png, 9);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_BASE, PNG_FILTER_TYPE_BASE);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const Rgb p = img.pixel(y, x);
        std::memcpy(&row[static_cast<std::size_t>(x) * 3], p.data(), 3);
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  Reader reader{bytes};
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  RgbImage img;
  std::vector<std::uint8_t> row;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("png: " + err);
  }
  png_set_read_fn(png, &reader, consume);
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_RGB || png_get_bit_depth(png, info) != 8) {
    err = "expected 8-bit RGB";
  } else {
    img = RgbImage(static_cast<int>(png_get_image_height(png, info)),
                   static_cast<int>(png_get_image_width(png, info)));
    row.resize(static_cast<std::size_t>(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
      png_read_row(png, row.data(), nullptr);
      for (int x = 0; x < img.width; ++x) {
        const auto* p = &row[static_cast<std::size_t>(x) * 3];
        img.set(y, x, {p[0], p[1], p[2]});
      }
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!err.empty()) throw FormatError("png: " + err);
  return img;
}

RgbImage dataset_image(const Dataset& ds, std::size_t index) {
  if (index >= ds.size()) {
    throw ValidationError("sample index " + std::to_string(index) + " out of range (dataset has " +
                          std::to_string(ds.size()) + ")");
  }
  if (ds.channels != 3) throw FormatError("png export needs 3-channel images");
  RgbImage img(static_cast<int>(ds.height), static_cast<int>(ds.width));
  const auto src = ds.image(index);
  std::copy(src.begin(), src.end(), img.planes.begin());
  return img;
}

void export_png(const Dataset& ds, std::span<const std::size_t> indices, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string csv = "index,label,objects\n";
  for (std::size_t index : indices) {
    const auto bytes = encode_png(dataset_image(ds, index));
    char name[32];
    std::snprintf(name, sizeof name, "sample_%06zu.png", index);
    write_file(dir / name, bytes);

    std::string objects;
    if (ds.meta.is_object() && ds.meta.contains("samples") && index < ds.meta["samples"].size()) {
      for (const auto& o : ds.meta["samples"][index]["objects"]) {
        if (!objects.empty()) objects += ';';
        objects += std::to_string(o.at("id").get<int>()) + "@" + std::to_string(o.at("block").get<int>());
      }
    }
    csv += std::to_string(index) + "," + std::to_string(ds.labels[index]) + "," + objects + "\n";
  }
  std::ofstream out(dir / "index.csv", std::ios::binary);
  if (!(out << csv)) throw IoError("cannot write " + (dir / "index.csv").string());
}

}  // namespace resmix::data
