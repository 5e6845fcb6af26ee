#include "resmix/audit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <set>

#include "resmix/datagen.hpp"
#include "resmix/error.hpp"
#include "resmix/hash.hpp"
#include "resmix/pentomino.hpp"

namespace resmix::verify {

bool AuditReport::pass() const {
  return samples > 0 && agreements == samples && balanced && provenance_violations == 0 &&
         overlap_violations == 0 && bbox_violations == 0 && palette_violations == 0 &&
         background_violations == 0 && meta_violations == 0 && render_mismatches == 0;
}

nlohmann::json AuditReport::to_json() const {
  return {{"path", path},
          {"dataset", dataset},
          {"split", split},
          {"samples", samples},
          {"agreement", agreement},
          {"label_0", zeros},
          {"label_1", ones},
          {"balanced", balanced},
          {"provenance_violations", provenance_violations},
          {"overlap_violations", overlap_violations},
          {"bbox_violations", bbox_violations},
          {"palette_violations", palette_violations},
          {"background_violations", background_violations},
          {"meta_violations", meta_violations},
          {"render_mismatches", render_mismatches},
          {"rendered", rendered},
          {"hash", hash},
          {"problems", problems},
          {"pass", pass()}};
}

std::string AuditReport::summary() const {
  std::string s = dataset + "/" + split + ": " + std::to_string(samples) + " samples, agreement " +
                  std::to_string(agreement) + ", labels " + std::to_string(zeros) + "/" + std::to_string(ones);
  auto add = [&](const char* name, std::size_t v) {
    if (v) s += ", " + std::to_string(v) + " " + name;
  };
  add("provenance violations", provenance_violations);
  add("overlap violations", overlap_violations);
  add("bbox violations", bbox_violations);
  add("palette violations", palette_violations);
  add("background violations", background_violations);
  add("meta violations", meta_violations);
  add("render mismatches", render_mismatches);
  if (!problems.empty()) s += "; first problem: " + problems.front();
  return s;
}

std::string dataset_hash(const data::Dataset& ds) { return sha256_hex(data::encode_dataset(ds)); }

namespace {

constexpr std::size_t kMaxProblems = 10;

struct Rect {
  int y0, x0, h, w;
};

// Every color a palette entry can take after gray modulation, keyed by palette
// index.
const std::array<std::set<std::array<std::uint8_t, 3>>, 10>& shades() {
  static const auto table = [] {
    std::array<std::set<std::array<std::uint8_t, 3>>, 10> t;
    for (std::size_t c = 0; c < 10; ++c) {
      const auto& p = data::palette()[c];
      for (int g = 1; g <= 255; ++g) {
        std::array<std::uint8_t, 3> v{};
        for (int k = 0; k < 3; ++k) v[k] = static_cast<std::uint8_t>(std::floor(g * p[k] / 255.0 + 0.5));
        t[c].insert(v);
      }
    }
    return t;
  }();
  return table;
}

class Auditor {
 public:
  Auditor(const data::Dataset& ds, AuditReport& rep) : ds_(ds), rep_(rep) {}

  void problem(std::size_t i, const std::string& what) {
    if (rep_.problems.size() < kMaxProblems) rep_.problems.push_back("sample " + std::to_string(i) + ": " + what);
  }

  // Geometry and pixel checks shared by both datasets. exact: pixels must be
  // the palette color itself rather than a shade of it.
  void check_pixels(std::size_t i, const std::vector<data::ObjectMeta>& objs, int grid, int block, bool exact) {
    const int H = static_cast<int>(ds_.height), W = static_cast<int>(ds_.width);
    std::vector<int> owner(static_cast<std::size_t>(H * W), -1);
    std::set<int> blocks;
    for (std::size_t k = 0; k < objs.size(); ++k) {
      const auto& o = objs[k];
      if (o.block < 0 || o.block >= grid * grid || !blocks.insert(o.block).second) {
        ++rep_.overlap_violations;
        problem(i, "block " + std::to_string(o.block) + " invalid or reused");
        continue;
      }
      if (o.offset_x < 0 || o.offset_y < 0 || o.width < 1 || o.height < 1 || o.offset_x + o.width > block ||
          o.offset_y + o.height > block) {
        ++rep_.bbox_violations;
        problem(i, "object " + std::to_string(k) + " leaves its block");
        continue;
      }
      const Rect r{(o.block / grid) * block + o.offset_y, (o.block % grid) * block + o.offset_x, o.height, o.width};
      for (int y = r.y0; y < r.y0 + r.h; ++y)
        for (int x = r.x0; x < r.x0 + r.w; ++x) {
          int& cell = owner[static_cast<std::size_t>(y * W + x)];
          if (cell >= 0) {
            ++rep_.overlap_violations;
            problem(i, "objects overlap at (" + std::to_string(y) + "," + std::to_string(x) + ")");
          }
          cell = static_cast<int>(k);
        }
    }
    const auto img = ds_.image(i);
    const std::size_t plane = static_cast<std::size_t>(H * W);
    std::size_t bad_bg = 0, bad_color = 0;
    for (std::size_t p = 0; p < plane; ++p) {
      const std::array<std::uint8_t, 3> px{img[p], img[plane + p], img[2 * plane + p]};
      const bool black = px[0] == 0 && px[1] == 0 && px[2] == 0;
      if (black) continue;
      const int k = owner[p];
      if (k < 0) {
        ++bad_bg;
        continue;
      }
      const auto c = static_cast<std::size_t>(objs[static_cast<std::size_t>(k)].color);
      const bool ok = c < 10 && (exact ? px == data::palette()[c] : shades()[c].contains(px));
      if (!ok) ++bad_color;
    }
    if (bad_bg) {
      rep_.background_violations += bad_bg;
      problem(i, std::to_string(bad_bg) + " lit pixels outside every object");
    }
    if (bad_color) {
      rep_.palette_violations += bad_color;
      problem(i, std::to_string(bad_color) + " pixels off their object's palette color");
    }
  }

 private:
  const data::Dataset& ds_;
  AuditReport& rep_;
};

template <typename T>
bool member(const std::vector<T>& set, const T& v) {
  return std::find(set.begin(), set.end(), v) != set.end();
}

void audit_mnist(const data::Dataset& ds, const nlohmann::json& meta, const data::MnistFiles* mnist,
                 AuditReport& rep, Auditor& a) {
  const nlohmann::json& cj = meta.at("config");
  const auto cfg = data::MnistParityGenConfig::from_json(cj);
  const data::Split split = data::parse_split(rep.split);
  const nlohmann::json& src = cj.at("source");
  const bool from_test = split == data::Split::Test;
  const std::string want_file = from_test ? "t10k" : "train";
  auto file_count = src.at("file_count").get<std::uint32_t>();
  if (mnist) file_count = from_test ? mnist->test_images.count : mnist->train_images.count;
  std::uint32_t lo = 0, hi = file_count;
  if (split == data::Split::Train) hi = file_count - cfg.val_pool_size;
  if (split == data::Split::Val) lo = file_count - cfg.val_pool_size;
  if (src.at("file").get<std::string>() != want_file) {
    ++rep.provenance_violations;
    a.problem(0, "digits drawn from the " + src.at("file").get<std::string>() + " file, expected " + want_file);
  }
  const data::IdxLabels* digit_labels = mnist ? (from_test ? &mnist->test_labels : &mnist->train_labels) : nullptr;
  std::optional<data::MnistSource> pool;
  if (mnist) pool = data::make_pool(*mnist, split, cfg.val_pool_size);
  rep.rendered = pool.has_value();

  const auto& samples = meta.at("samples");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    data::SampleMeta sm;
    sm.label = samples[i].at("label").get<int>();
    for (const auto& o : samples[i].at("objects")) sm.objects.push_back(data::ObjectMeta::from_json(o));
    bool meta_ok = sm.objects.size() == 2;
    for (const auto& o : sm.objects) {
      meta_ok = meta_ok && o.identity >= 0 && o.identity <= 9 && member(cfg.scales, o.scale) &&
                member(cfg.rotations, o.rotation) && o.width == o.scale && o.height == o.scale && o.color >= 0 &&
                o.color < 10;
      if (o.source_index < static_cast<int>(lo) || o.source_index >= static_cast<int>(hi)) {
        ++rep.provenance_violations;
        a.problem(i, "digit index " + std::to_string(o.source_index) + " outside the " + rep.split + " pool [" +
                         std::to_string(lo) + ", " + std::to_string(hi) + ")");
      } else if (digit_labels && digit_labels->labels[static_cast<std::size_t>(o.source_index)] != o.identity) {
        ++rep.provenance_violations;
        a.problem(i, "digit index " + std::to_string(o.source_index) + " is not a " + std::to_string(o.identity));
      }
    }
    if (!meta_ok) {
      ++rep.meta_violations;
      a.problem(i, "object record outside the configured transform sets");
      continue;
    }
    const int oracle = (sm.objects[0].identity % 2 == sm.objects[1].identity % 2) ? 1 : 0;
    if (oracle == ds.labels[i] && sm.label == ds.labels[i]) {
      ++rep.agreements;
    } else {
      a.problem(i, "label " + std::to_string(ds.labels[i]) + " but digits " + std::to_string(sm.objects[0].identity) +
                       "," + std::to_string(sm.objects[1].identity));
    }
    a.check_pixels(i, sm.objects, cfg.grid, cfg.block_size(), false);
    if (pool) {
      bool in_pool = true;
      for (const auto& o : sm.objects)
        in_pool = in_pool && o.source_index >= static_cast<int>(lo) && o.source_index < static_cast<int>(hi);
      if (!in_pool) continue;
      const data::RgbImage img = data::render_mnist_parity(cfg, *pool, sm);
      if (!std::equal(img.planes.begin(), img.planes.end(), ds.image(i).begin())) {
        ++rep.render_mismatches;
        a.problem(i, "pixels differ from a re-render of the recorded metadata");
      }
    }
  }
}

void audit_pentomino(const data::Dataset& ds, const nlohmann::json& meta, AuditReport& rep, Auditor& a) {
  const auto cfg = data::PentominoGenConfig::from_json(meta.at("config"));
  rep.rendered = true;
  const auto& samples = meta.at("samples");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    data::SampleMeta sm;
    sm.label = samples[i].at("label").get<int>();
    for (const auto& o : samples[i].at("objects")) sm.objects.push_back(data::ObjectMeta::from_json(o));
    bool meta_ok = static_cast<int>(sm.objects.size()) == cfg.num_sprites;
    std::vector<int> types;
    for (const auto& o : sm.objects) {
      if (o.source_index != -1) {
        ++rep.provenance_violations;
        a.problem(i, "sprite carries a source index");
      }
      const bool ok = o.identity >= 0 && o.identity < data::kNumSpriteTypes && member(cfg.rotations, o.rotation) &&
                      member(cfg.scales, o.scale) && o.color >= 0 && o.color < 10;
      if (ok) {
        const auto m = data::upscale(data::rotate_quarter(data::sprite_mask(o.identity), o.rotation / 90), o.scale);
        meta_ok = meta_ok && m.rows == o.height && m.cols == o.width;
      }
      meta_ok = meta_ok && ok;
      types.push_back(o.identity);
    }
    if (!meta_ok) {
      ++rep.meta_violations;
      a.problem(i, "sprite record outside the configured transform sets");
      continue;
    }
    const bool all_same = std::all_of(types.begin(), types.end(), [&](int t) { return t == types[0]; });
    const int oracle = all_same ? 0 : 1;
    if (oracle == ds.labels[i] && sm.label == ds.labels[i]) {
      ++rep.agreements;
    } else {
      a.problem(i, "label " + std::to_string(ds.labels[i]) + " disagrees with its sprite types");
    }
    a.check_pixels(i, sm.objects, cfg.grid, cfg.block_size(), true);
    const data::RgbImage img = data::render_pentomino(cfg, sm);
    if (!std::equal(img.planes.begin(), img.planes.end(), ds.image(i).begin())) {
      ++rep.render_mismatches;
      a.problem(i, "pixels differ from a re-render of the recorded metadata");
    }
  }
}

}  // namespace

AuditReport audit_dataset(const data::Dataset& ds, const data::MnistFiles* mnist) {
  if (!ds.meta.is_object()) throw ValidationError("dataset has no metadata sidecar; audit impossible");
  AuditReport rep;
  rep.samples = ds.size();
  rep.hash = dataset_hash(ds);
  for (auto y : ds.labels) (y ? rep.ones : rep.zeros) += 1;
  rep.balanced = rep.samples > 0 && (std::max(rep.zeros, rep.ones) - std::min(rep.zeros, rep.ones)) == rep.samples % 2;
  Auditor a(ds, rep);
  try {
    rep.dataset = ds.meta.at("dataset").get<std::string>();
    rep.split = ds.meta.at("split").get<std::string>();
    const auto& samples = ds.meta.at("samples");
    if (samples.size() != ds.size()) {
      ++rep.meta_violations;
      a.problem(0, "sidecar lists " + std::to_string(samples.size()) + " samples, file holds " +
                       std::to_string(ds.size()));
    } else if (rep.dataset == "mnist-parity") {
      audit_mnist(ds, ds.meta, mnist, rep, a);
    } else if (rep.dataset == "pentomino") {
      audit_pentomino(ds, ds.meta, rep, a);
    } else {
      throw ValidationError("unknown dataset kind '" + rep.dataset + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed sidecar: ") + e.what());
  }
  rep.agreement = rep.samples ? static_cast<double>(rep.agreements) / static_cast<double>(rep.samples) : 0.0;
  return rep;
}

AuditReport audit_dataset(const std::filesystem::path& path, const data::MnistFiles* mnist) {
  if (!std::filesystem::exists(data::sidecar_path(path))) {
    throw ValidationError("no metadata sidecar " + data::sidecar_path(path).string() + "; audit impossible");
  }
  AuditReport rep = audit_dataset(data::read_dataset(path), mnist);
  rep.path = path.string();
  return rep;
}

}  // namespace resmix::verify
