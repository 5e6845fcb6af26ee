#include "resmix/datagen.hpp"

#include <algorithm>
#include <thread>

#include "resmix/error.hpp"
#include "resmix/pentomino.hpp"
#include "resmix/rng.hpp"

namespace resmix::data {

nlohmann::json ObjectMeta::to_json() const {
  return {{"id", identity}, {"block", block}, {"x", offset_x}, {"y", offset_y},
          {"scale", scale}, {"rot", rotation}, {"color", color}, {"w", width},
          {"h", height},    {"src", source_index}};
}

ObjectMeta ObjectMeta::from_json(const nlohmann::json& j) {
  ObjectMeta m;
  m.identity = j.at("id").get<int>();
  m.block = j.at("block").get<int>();
  m.offset_x = j.at("x").get<int>();
  m.offset_y = j.at("y").get<int>();
  m.scale = j.at("scale").get<int>();
  m.rotation = j.at("rot").get<int>();
  m.color = j.at("color").get<int>();
  m.width = j.at("w").get<int>();
  m.height = j.at("h").get<int>();
  m.source_index = j.at("src").get<int>();
  return m;
}

int mnist_parity_label(int digit_a, int digit_b) {
  if (digit_a < 0 || digit_a > 9 || digit_b < 0 || digit_b > 9) {
    throw ValidationError("digits must lie in 0..9, got " + std::to_string(digit_a) + "," +
                          std::to_string(digit_b));
  }
  return digit_a % 2 == digit_b % 2 ? 1 : 0;
}

int pentomino_label(std::span<const int> types) {
  if (types.empty()) throw ValidationError("pentomino_label needs at least one sprite");
  return std::all_of(types.begin(), types.end(), [&](int t) { return t == types[0]; }) ? 0 : 1;
}

namespace {

void check_counts(const std::array<std::uint32_t, 3>& counts) {
  for (auto c : counts)
    if (c == 0) throw ValidationError("split sizes must be positive");
}

std::array<std::uint32_t, 3> counts_from(const nlohmann::json& j) {
  auto v = j.at("counts").get<std::vector<std::uint32_t>>();
  if (v.size() != 3) throw ValidationError("counts must list train, val and test sizes");
  return {v[0], v[1], v[2]};
}

// Picks k distinct values from [0, n) in draw order.
std::vector<int> distinct(Rng& rng, int n, int k) {
  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(n - i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& options) {
  return options[rng.below(options.size())];
}

// Runs fn(i) for i in [0, count) across `threads` workers.
template <typename Fn>
void parallel_for(std::uint32_t count, int threads, Fn fn) {
  const auto workers = static_cast<std::uint32_t>(std::clamp(threads, 1, 64));
  if (workers == 1 || count < 2) {
    for (std::uint32_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::uint32_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::uint32_t i = w; i < count; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::pair<int, int> block_origin(int block, int grid, int block_size) {
  return {(block / grid) * block_size, (block % grid) * block_size};
}

nlohmann::json sidecar(const std::string& dataset, Split split, std::uint64_t seed,
                       nlohmann::json config, const std::vector<SampleMeta>& metas) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& m : metas) {
    nlohmann::json objs = nlohmann::json::array();
    for (const auto& o : m.objects) objs.push_back(o.to_json());
    samples.push_back({{"label", m.label}, {"objects", std::move(objs)}});
  }
  return {{"format", "resmix-dataset-meta"},
          {"version", 1},
          {"dataset", dataset},
          {"split", split_name(split)},
          {"master_seed", seed},
          {"config", std::move(config)},
          {"samples", std::move(samples)}};
}

constexpr std::uint64_t kMnistTag = 0x4d4e4953545041ULL;  // dataset discriminators
constexpr std::uint64_t kPentoTag = 0x50454e544f4d4fULL;

}  // namespace

std::vector<std::uint8_t> balanced_labels(std::size_t n, std::uint64_t seed) {
  std::vector<std::uint8_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i < n / 2 ? 0 : 1;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(labels[i - 1], labels[rng.below(i)]);
  return labels;
}

// --- MNIST Parity -------------------------------------------------------------

void MnistParityGenConfig::validate() const {
  check_counts(counts);
  if (grid < 1 || image_size % grid != 0 || grid * grid < 2) {
    throw ValidationError("image_size must split into a grid of at least two blocks");
  }
  if (scales.empty() || rotations.empty()) throw ValidationError("scale and rotation sets must be non-empty");
  for (int s : scales)
    if (s < 1 || s > block_size()) {
      throw ValidationError("digit scale " + std::to_string(s) + " does not fit a " +
                            std::to_string(block_size()) + " px block");
    }
}

nlohmann::json MnistParityGenConfig::to_json() const {
  return {{"counts", counts},     {"image_size", image_size}, {"grid", grid},
          {"scales", scales},     {"rotations", rotations},   {"master_seed", master_seed},
          {"val_pool_size", val_pool_size}};
}

MnistParityGenConfig MnistParityGenConfig::from_json(const nlohmann::json& j) {
  MnistParityGenConfig c;
  c.counts = counts_from(j);
  c.image_size = j.at("image_size").get<int>();
  c.grid = j.at("grid").get<int>();
  c.scales = j.at("scales").get<std::vector<int>>();
  c.rotations = j.at("rotations").get<std::vector<int>>();
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  c.val_pool_size = j.at("val_pool_size").get<std::uint32_t>();
  c.validate();
  return c;
}

RgbImage render_mnist_parity(const MnistParityGenConfig& cfg, const MnistSource& pool,
                             const SampleMeta& meta) {
  RgbImage canvas(cfg.image_size, cfg.image_size);
  const std::size_t px = std::size_t{pool.rows} * pool.cols;
  for (const auto& o : meta.objects) {
    const auto local = static_cast<std::size_t>(o.source_index) - pool.first;
    if (o.source_index < static_cast<int>(pool.first) || local >= pool.size()) {
      throw ValidationError("digit index " + std::to_string(o.source_index) + " is outside the " +
                            split_name(pool.split) + " pool");
    }
    GrayImage digit(static_cast<int>(pool.rows), static_cast<int>(pool.cols));
    std::copy_n(pool.pixels.begin() + static_cast<std::ptrdiff_t>(local * px), px, digit.pixels.begin());
    const GrayImage shaped = resize_bilinear(rotate_about_center(digit, o.rotation), o.scale);
    const auto [y0, x0] = block_origin(o.block, cfg.grid, cfg.block_size());
    paste(canvas, colorize(shaped, palette()[static_cast<std::size_t>(o.color)]), y0 + o.offset_y,
          x0 + o.offset_x);
  }
  return canvas;
}

Dataset generate_mnist_parity(const MnistParityGenConfig& cfg, const MnistSource& pool,
                              std::uint32_t count, int threads) {
  cfg.validate();
  std::array<std::vector<std::uint32_t>, 10> by_class;
  for (std::uint32_t i = 0; i < pool.size(); ++i) {
    const auto d = pool.labels[i];
    if (d > 9) throw FormatError("MNIST label " + std::to_string(d) + " outside 0..9");
    by_class[d].push_back(i);
  }
  for (int d = 0; d < 10; ++d) {
    if (by_class[static_cast<std::size_t>(d)].size() < 2) {
      throw ValidationError("the " + split_name(pool.split) + " pool has fewer than two exemplars of digit " +
                            std::to_string(d));
    }
  }

  const auto split_id = static_cast<std::uint64_t>(pool.split);
  const std::vector<std::uint8_t> labels =
      balanced_labels(count, hash_combine(hash_combine(cfg.master_seed, kMnistTag), split_id));

  Dataset ds;
  ds.channels = 3;
  ds.height = ds.width = static_cast<std::uint32_t>(cfg.image_size);
  ds.labels = labels;
  ds.images.assign(std::size_t{count} * ds.image_bytes(), 0);
  std::vector<SampleMeta> metas(count);

  parallel_for(count, threads, [&](std::uint32_t i) {
    Rng rng = Rng::stream(cfg.master_seed, "mnist-parity", split_id, i);
    SampleMeta meta;
    meta.label = labels[i];
    int a, b;
    if (meta.label == 1) {
      const int parity = static_cast<int>(rng.below(2));
      a = 2 * static_cast<int>(rng.below(5)) + parity;
      b = 2 * static_cast<int>(rng.below(5)) + parity;
    } else {
      a = static_cast<int>(rng.below(10));
      b = 2 * static_cast<int>(rng.below(5)) + (1 - a % 2);
    }
    const auto& pool_a = by_class[static_cast<std::size_t>(a)];
    const auto& pool_b = by_class[static_cast<std::size_t>(b)];
    const std::uint32_t ex_a = pick(rng, pool_a);
    std::uint32_t ex_b = pick(rng, pool_b);
    while (ex_b == ex_a) ex_b = pick(rng, pool_b);

    const std::vector<int> blocks = distinct(rng, cfg.grid * cfg.grid, 2);
    const std::array<std::pair<int, std::uint32_t>, 2> digits{{{a, ex_a}, {b, ex_b}}};
    for (std::size_t k = 0; k < 2; ++k) {
      ObjectMeta o;
      o.identity = digits[k].first;
      o.source_index = static_cast<int>(pool.first + digits[k].second);
      o.color = static_cast<int>(rng.below(palette().size()));
      o.scale = pick(rng, cfg.scales);
      o.rotation = pick(rng, cfg.rotations);
      o.block = blocks[k];
      o.width = o.height = o.scale;
      o.offset_x = static_cast<int>(rng.range(0, cfg.block_size() - o.scale));
      o.offset_y = static_cast<int>(rng.range(0, cfg.block_size() - o.scale));
      meta.objects.push_back(o);
    }
    const RgbImage img = render_mnist_parity(cfg, pool, meta);
    std::copy(img.planes.begin(), img.planes.end(), ds.image(i).begin());
    metas[i] = std::move(meta);
  });

  nlohmann::json config = cfg.to_json();
  config["source"] = {{"file", pool.file}, {"first", pool.first}, {"count", pool.size()},
                      {"file_count", pool.file_count}};
  ds.meta = sidecar("mnist-parity", pool.split, cfg.master_seed, std::move(config), metas);
  return ds;
}

// --- Pentomino ----------------------------------------------------------------

void PentominoGenConfig::validate() const {
  check_counts(counts);
  if (grid < 1 || image_size % grid != 0) throw ValidationError("image_size must be a multiple of grid");
  if (num_sprites < 2 || num_sprites > grid * grid) {
    throw ValidationError("num_sprites must lie in [2, grid^2]");
  }
  if (rotations.empty() || scales.empty()) throw ValidationError("rotation and scale sets must be non-empty");
  for (int r : rotations)
    if (r % 90 != 0) throw ValidationError("sprite rotations must be multiples of 90 degrees");
  for (int t = 0; t < kNumSpriteTypes; ++t)
    for (int r : rotations)
      for (int s : scales) {
        const SpriteMask m = upscale(rotate_quarter(sprite_mask(t), r / 90), s);
        if (m.rows > block_size() || m.cols > block_size()) {
          throw ValidationError("sprite " + std::string(sprite_name(t)) + " at scale " +
                                std::to_string(s) + " does not fit a " + std::to_string(block_size()) +
                                " px block");
        }
      }
}

nlohmann::json PentominoGenConfig::to_json() const {
  return {{"counts", counts},           {"image_size", image_size}, {"grid", grid},
          {"num_sprites", num_sprites}, {"rotations", rotations},   {"scales", scales},
          {"master_seed", master_seed}};
}

PentominoGenConfig PentominoGenConfig::from_json(const nlohmann::json& j) {
  PentominoGenConfig c;
  c.counts = counts_from(j);
  c.image_size = j.at("image_size").get<int>();
  c.grid = j.at("grid").get<int>();
  c.num_sprites = j.at("num_sprites").get<int>();
  c.rotations = j.at("rotations").get<std::vector<int>>();
  c.scales = j.at("scales").get<std::vector<int>>();
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  c.validate();
  return c;
}

RgbImage render_pentomino(const PentominoGenConfig& cfg, const SampleMeta& meta) {
  RgbImage canvas(cfg.image_size, cfg.image_size);
  for (const auto& o : meta.objects) {
    const SpriteMask m = upscale(rotate_quarter(sprite_mask(o.identity), o.rotation / 90), o.scale);
    const auto [y0, x0] = block_origin(o.block, cfg.grid, cfg.block_size());
    const Rgb& color = palette()[static_cast<std::size_t>(o.color)];
    for (int y = 0; y < m.rows; ++y)
      for (int x = 0; x < m.cols; ++x)
        if (m.at(y, x)) canvas.set(y0 + o.offset_y + y, x0 + o.offset_x + x, color);
  }
  return canvas;
}

Dataset generate_pentomino(const PentominoGenConfig& cfg, Split split, std::uint32_t count,
                           int threads) {
  cfg.validate();
  const auto split_id = static_cast<std::uint64_t>(split);
  const std::vector<std::uint8_t> labels =
      balanced_labels(count, hash_combine(hash_combine(cfg.master_seed, kPentoTag), split_id));

  Dataset ds;
  ds.channels = 3;
  ds.height = ds.width = static_cast<std::uint32_t>(cfg.image_size);
  ds.labels = labels;
  ds.images.assign(std::size_t{count} * ds.image_bytes(), 0);
  std::vector<SampleMeta> metas(count);
  const auto sprites = static_cast<std::size_t>(cfg.num_sprites);

  parallel_for(count, threads, [&](std::uint32_t i) {
    Rng rng = Rng::stream(cfg.master_seed, "pentomino", split_id, i);
    SampleMeta meta;
    meta.label = labels[i];
    std::vector<int> types(sprites);
    if (meta.label == 0) {
      std::fill(types.begin(), types.end(), static_cast<int>(rng.below(kNumSpriteTypes)));
    } else {
      // All but one sprite share a type; the odd one differs.
      const std::vector<int> pair = distinct(rng, kNumSpriteTypes, 2);
      const auto odd = rng.below(sprites);
      for (std::size_t k = 0; k < sprites; ++k) types[k] = k == odd ? pair[1] : pair[0];
    }
    const std::vector<int> blocks = distinct(rng, cfg.grid * cfg.grid, cfg.num_sprites);
    for (std::size_t k = 0; k < sprites; ++k) {
      ObjectMeta o;
      o.identity = types[k];
      o.block = blocks[k];
      o.rotation = pick(rng, cfg.rotations);
      o.scale = pick(rng, cfg.scales);
      o.color = static_cast<int>(rng.below(palette().size()));
      const SpriteMask m = upscale(rotate_quarter(sprite_mask(o.identity), o.rotation / 90), o.scale);
      o.width = m.cols;
      o.height = m.rows;
      o.offset_x = static_cast<int>(rng.range(0, cfg.block_size() - m.cols));
      o.offset_y = static_cast<int>(rng.range(0, cfg.block_size() - m.rows));
      meta.objects.push_back(o);
    }
    const RgbImage img = render_pentomino(cfg, meta);
    std::copy(img.planes.begin(), img.planes.end(), ds.image(i).begin());
    metas[i] = std::move(meta);
  });

  ds.meta = sidecar("pentomino", split, cfg.master_seed, cfg.to_json(), metas);
  return ds;
}

}  // namespace resmix::data
