#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace resmix::data {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols
};

struct IdxLabels {
  std::uint32_t count = 0;
  std::vector<std::uint8_t> labels;
};

// Parsers for the big-endian IDX container. Throw FormatError on bad magic,
// truncated payloads or trailing bytes.
IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
IdxLabels parse_idx_labels(std::span<const std::uint8_t> bytes);

// Reads a whole file, transparently inflating gzip input.
std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path);

// Serializes IDX payloads; used for fixtures.
std::vector<std::uint8_t> encode_idx_images(const IdxImages& images);
std::vector<std::uint8_t> encode_idx_labels(const IdxLabels& labels);

enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };

std::string split_name(Split s);
Split parse_split(const std::string& name);

// A pool of 28x28 digits drawn from one official MNIST file.
struct MnistSource {
  Split split = Split::Train;
  std::string file;          // "train" or "t10k"
  std::uint32_t first = 0;   // index of the first pool image within its file
  std::uint32_t file_count = 0;  // images in the whole file
  std::uint32_t rows = 28;
  std::uint32_t cols = 28;
  std::vector<std::uint8_t> pixels;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
};

struct MnistFiles {
  IdxImages train_images;
  IdxLabels train_labels;
  IdxImages test_images;
  IdxLabels test_labels;
};

// Loads train-images-idx3-ubyte, train-labels-idx1-ubyte, t10k-images-idx3-ubyte
// and t10k-labels-idx1-ubyte (each optionally with a .gz suffix) from dir.
MnistFiles load_mnist_dir(const std::filesystem::path& dir);

// Splits the official files into disjoint pools: the last val_size training
// images form the validation pool, the rest the training pool, and the test
// file the test pool.
MnistSource make_pool(const MnistFiles& files, Split split, std::uint32_t val_size = 10000);

}  // namespace resmix::data
