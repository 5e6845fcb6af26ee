#include "resmix/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "resmix/dataset_file.hpp"
#include "resmix/error.hpp"

namespace resmix {

namespace {

constexpr char kMagic[4] = {'R', 'M', 'X', 'C'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{b[at + static_cast<std::size_t>(i)]} << (8 * i);
  return v;
}

void put_blob(std::vector<std::uint8_t>& out, const Tensor<float>& t) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(t.ptr());
  out.insert(out.end(), p, p + t.size() * sizeof(float));
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const nn::Network<float>& net, const CheckpointInfo& info) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : net.params().params()) {
    tensors.push_back({{"name", p.name}, {"kind", "value"}, {"shape", p.value.shape()}});
    tensors.push_back({{"name", p.name}, {"kind", "momentum"}, {"shape", p.momentum.shape()}});
  }
  for (const auto& b : net.params().buffers()) {
    tensors.push_back({{"name", b.name}, {"kind", "buffer"}, {"shape", b.value.shape()}});
  }
  const nlohmann::json header = {{"model", info.model.to_json()},
                                 {"epoch", info.epoch},
                                 {"seed", info.seed},
                                 {"state", info.state},
                                 {"tensors", std::move(tensors)}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& p : net.params().params()) {
    put_blob(out, p.value);
    put_blob(out, p.momentum);
  }
  for (const auto& b : net.params().buffers()) put_blob(out, b.value);
  return out;
}

LoadedCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic");
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t len = get_u32(bytes, 8);
  if (bytes.size() < 12 + std::size_t{len}) throw FormatError("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: header is not JSON: ") + e.what());
  }

  LoadedCheckpoint ck;
  ck.info.model = nn::ModelConfig::from_json(header.at("model"));
  ck.info.epoch = header.at("epoch").get<int>();
  ck.info.seed = header.at("seed").get<std::uint64_t>();
  ck.info.state = header.value("state", nlohmann::json::object());
  ck.net = nn::Network<float>::build(ck.info.model, ck.info.seed);
  auto& params = ck.net->params();

  std::size_t at = 12 + len;
  std::size_t loaded = 0;
  for (const auto& t : header.at("tensors")) {
    const auto name = t.at("name").get<std::string>();
    const auto kind = t.at("kind").get<std::string>();
    const auto shape = t.at("shape").get<Shape>();
    Tensor<float>* dst = nullptr;
    if (kind == "buffer") {
      if (auto* b = params.find_buffer(name)) dst = &b->value;
    } else if (auto* p = params.find(name)) {
      dst = kind == "value" ? &p->value : &p->momentum;
    }
    if (!dst) throw FormatError("checkpoint: tensor " + name + " is not part of " + ck.info.model.label());
    if (dst->shape() != shape) {
      throw FormatError("checkpoint: " + name + " has shape " + shape_str(shape) + ", model expects " +
                        shape_str(dst->shape()));
    }
    const std::size_t n = dst->size() * sizeof(float);
    if (at + n > bytes.size()) {
      throw FormatError("checkpoint: length mismatch: expected at least " + std::to_string(at + n) +
                        " bytes, got " + std::to_string(bytes.size()));
    }
    std::memcpy(dst->ptr(), bytes.data() + at, n);
    at += n;
    ++loaded;
  }
  if (at != bytes.size()) {
    throw FormatError("checkpoint: length mismatch: expected " + std::to_string(at) + " bytes, got " +
                      std::to_string(bytes.size()));
  }
  const std::size_t expected = 2 * params.params().size() + params.buffers().size();
  if (loaded != expected) {
    throw FormatError("checkpoint: holds " + std::to_string(loaded) + " tensors, model needs " +
                      std::to_string(expected));
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const nn::Network<float>& net, const CheckpointInfo& info) {
  auto tmp = path;
  tmp += ".tmp";
  data::write_file(tmp, encode_checkpoint(net, info));
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(data::read_file(path));
}

}  // namespace resmix
