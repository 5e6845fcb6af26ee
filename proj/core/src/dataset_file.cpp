#include "resmix/dataset_file.hpp"

#include <cstring>
#include <fstream>

#include "resmix/error.hpp"

namespace resmix::data {

namespace {

void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint32_t get_le32(std::span<const std::uint8_t> b, std::size_t off) {
  return std::uint32_t{b[off]} | (std::uint32_t{b[off + 1]} << 8) |
         (std::uint32_t{b[off + 2]} << 16) | (std::uint32_t{b[off + 3]} << 24);
}

}  // namespace

Dataset Dataset::head(std::size_t count) const {
  if (count > size()) {
    throw ValidationError("cannot take " + std::to_string(count) + " samples from a dataset of " +
                          std::to_string(size()));
  }
  Dataset out;
  out.channels = channels;
  out.height = height;
  out.width = width;
  out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(count));
  out.images.assign(images.begin(), images.begin() + static_cast<std::ptrdiff_t>(count * image_bytes()));
  out.meta = meta;
  if (out.meta.is_object() && out.meta.contains("samples")) {
    auto& s = out.meta["samples"];
    s.erase(s.begin() + static_cast<std::ptrdiff_t>(count), s.end());
  }
  return out;
}

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  if (ds.images.size() != ds.size() * ds.image_bytes()) {
    throw FormatError("dataset holds " + std::to_string(ds.images.size()) + " image bytes for " +
                      std::to_string(ds.size()) + " samples of " + std::to_string(ds.image_bytes()));
  }
  std::vector<std::uint8_t> out;
  out.reserve(kDatasetHeaderBytes + ds.labels.size() + ds.images.size());
  out.insert(out.end(), std::begin(kDatasetMagic), std::end(kDatasetMagic));
  put_le32(out, kDatasetVersion);
  put_le32(out, static_cast<std::uint32_t>(ds.size()));
  put_le32(out, ds.channels);
  put_le32(out, ds.height);
  put_le32(out, ds.width);
  out.insert(out.end(), ds.labels.begin(), ds.labels.end());
  out.insert(out.end(), ds.images.begin(), ds.images.end());
  return out;
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kDatasetHeaderBytes) {
    throw FormatError("dataset: truncated header: expected " + std::to_string(kDatasetHeaderBytes) +
                      " bytes, got " + std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), kDatasetMagic, 4) != 0) throw FormatError("dataset: bad magic");
  const std::uint32_t version = get_le32(bytes, 4);
  if (version != kDatasetVersion) {
    throw FormatError("dataset: unsupported version " + std::to_string(version));
  }
  Dataset ds;
  const std::uint32_t n = get_le32(bytes, 8);
  ds.channels = get_le32(bytes, 12);
  ds.height = get_le32(bytes, 16);
  ds.width = get_le32(bytes, 20);
  const std::size_t expected = kDatasetHeaderBytes + n + std::size_t{n} * ds.image_bytes();
  if (bytes.size() != expected) {
    throw FormatError("dataset: length mismatch: expected " + std::to_string(expected) +
                      " bytes, got " + std::to_string(bytes.size()));
  }
  auto labels = bytes.subspan(kDatasetHeaderBytes, n);
  ds.labels.assign(labels.begin(), labels.end());
  auto images = bytes.subspan(kDatasetHeaderBytes + n);
  ds.images.assign(images.begin(), images.end());
  return ds;
}

std::filesystem::path sidecar_path(const std::filesystem::path& dataset_path) {
  auto p = dataset_path;
  p.replace_extension(".meta.json");
  return p;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw IoError("short read from " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  write_file(path, encode_dataset(ds));
  if (!ds.meta.is_null()) {
    const std::string text = ds.meta.dump() + "\n";
    write_file(sidecar_path(path),
               std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }
}

Dataset read_dataset(const std::filesystem::path& path) {
  Dataset ds = decode_dataset(read_file(path));
  const auto side = sidecar_path(path);
  if (std::filesystem::exists(side)) {
    std::ifstream in(side);
    try {
      ds.meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("dataset sidecar " + side.string() + ": " + e.what());
    }
  }
  return ds;
}

}  // namespace resmix::data
