#include "resmix/idx.hpp"

#include <zlib.h>

#include <array>
#include <cstdio>

#include "resmix/error.hpp"

namespace resmix::data {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void check_magic(std::span<const std::uint8_t> bytes, std::uint32_t expected, std::size_t header) {
  if (bytes.size() < 4) throw FormatError("IDX: truncated header (" + std::to_string(bytes.size()) + " bytes)");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != expected) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "IDX: bad magic 0x%08x (expected 0x%08x)", magic, expected);
    throw FormatError(buf);
  }
  if (bytes.size() < header) {
    throw FormatError("IDX: truncated header (" + std::to_string(bytes.size()) + " of " +
                      std::to_string(header) + " bytes)");
  }
}

void check_payload(std::size_t have, std::size_t header, std::size_t payload) {
  if (have != header + payload) {
    throw FormatError("IDX: truncated or oversized payload: expected " +
                      std::to_string(header + payload) + " bytes, got " + std::to_string(have));
  }
}

}  // namespace

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  check_magic(bytes, kIdxImagesMagic, 16);
  IdxImages out;
  out.count = read_be32(bytes, 4);
  out.rows = read_be32(bytes, 8);
  out.cols = read_be32(bytes, 12);
  const std::size_t payload = std::size_t{out.count} * out.rows * out.cols;
  check_payload(bytes.size(), 16, payload);
  out.pixels.assign(bytes.begin() + 16, bytes.end());
  return out;
}

IdxLabels parse_idx_labels(std::span<const std::uint8_t> bytes) {
  check_magic(bytes, kIdxLabelsMagic, 8);
  IdxLabels out;
  out.count = read_be32(bytes, 4);
  check_payload(bytes.size(), 8, out.count);
  out.labels.assign(bytes.begin() + 8, bytes.end());
  return out;
}

std::vector<std::uint8_t> encode_idx_images(const IdxImages& images) {
  std::vector<std::uint8_t> out;
  put_be32(out, kIdxImagesMagic);
  put_be32(out, images.count);
  put_be32(out, images.rows);
  put_be32(out, images.cols);
  out.insert(out.end(), images.pixels.begin(), images.pixels.end());
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(const IdxLabels& labels) {
  std::vector<std::uint8_t> out;
  put_be32(out, kIdxLabelsMagic);
  put_be32(out, labels.count);
  out.insert(out.end(), labels.labels.begin(), labels.labels.end());
  return out;
}

std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path) {
  // gzread passes non-gzip files through unchanged.
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> buf;
  int n;
  while ((n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()))) > 0) {
    out.insert(out.end(), buf.begin(), buf.begin() + n);
  }
  int err = Z_OK;
  const char* msg = n < 0 ? gzerror(f, &err) : nullptr;
  gzclose(f);
  if (n < 0) throw IoError("error reading " + path.string() + ": " + (msg ? msg : "unknown"));
  return out;
}

std::string split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw ValidationError("unknown split '" + name + "'");
}

namespace {

std::filesystem::path find_idx(const std::filesystem::path& dir, const std::string& stem) {
  for (const char* suffix : {"", ".gz"}) {
    auto p = dir / (stem + suffix);
    if (std::filesystem::exists(p)) return p;
  }
  throw IoError("missing MNIST file " + (dir / stem).string() + "[.gz]; run `resmix fetch`");
}

}  // namespace

MnistFiles load_mnist_dir(const std::filesystem::path& dir) {
  MnistFiles f;
  f.train_images = parse_idx_images(read_maybe_gzip(find_idx(dir, "train-images-idx3-ubyte")));
  f.train_labels = parse_idx_labels(read_maybe_gzip(find_idx(dir, "train-labels-idx1-ubyte")));
  f.test_images = parse_idx_images(read_maybe_gzip(find_idx(dir, "t10k-images-idx3-ubyte")));
  f.test_labels = parse_idx_labels(read_maybe_gzip(find_idx(dir, "t10k-labels-idx1-ubyte")));
  if (f.train_images.count != f.train_labels.count) {
    throw FormatError("MNIST train: " + std::to_string(f.train_images.count) + " images but " +
                      std::to_string(f.train_labels.count) + " labels");
  }
  if (f.test_images.count != f.test_labels.count) {
    throw FormatError("MNIST test: " + std::to_string(f.test_images.count) + " images but " +
                      std::to_string(f.test_labels.count) + " labels");
  }
  return f;
}

MnistSource make_pool(const MnistFiles& files, Split split, std::uint32_t val_size) {
  const bool from_test = split == Split::Test;
  const IdxImages& images = from_test ? files.test_images : files.train_images;
  const IdxLabels& labels = from_test ? files.test_labels : files.train_labels;
  if (images.count != labels.count) {
    throw FormatError("MNIST image/label count mismatch: " + std::to_string(images.count) +
                      " vs " + std::to_string(labels.count));
  }
  if (!from_test && val_size >= images.count) {
    throw ValidationError("validation pool of " + std::to_string(val_size) +
                          " leaves no training digits out of " + std::to_string(images.count));
  }
  std::uint32_t first = 0, count = images.count;
  if (split == Split::Train) count = images.count - val_size;
  if (split == Split::Val) first = images.count - val_size, count = val_size;

  MnistSource pool;
  pool.split = split;
  pool.file = from_test ? "t10k" : "train";
  pool.first = first;
  pool.file_count = images.count;
  pool.rows = images.rows;
  pool.cols = images.cols;
  const std::size_t px = std::size_t{images.rows} * images.cols;
  pool.pixels.assign(images.pixels.begin() + static_cast<std::ptrdiff_t>(first * px),
                     images.pixels.begin() + static_cast<std::ptrdiff_t>((first + count) * px));
  pool.labels.assign(labels.labels.begin() + first, labels.labels.begin() + first + count);
  return pool;
}

}  // namespace resmix::data
