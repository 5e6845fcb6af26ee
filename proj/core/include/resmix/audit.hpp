#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "resmix/dataset_file.hpp"
#include "resmix/idx.hpp"

namespace resmix::verify {

// Independent re-derivation of a generated split from its sidecar: labels,
// balance, digit provenance, object geometry and colors.
struct AuditReport {
  std::string path;
  std::string dataset;  // "mnist-parity" | "pentomino"
  std::string split;
  std::size_t samples = 0;
  std::size_t agreements = 0;  // stored label == oracle(meta)
  double agreement = 0;
  std::size_t zeros = 0;
  std::size_t ones = 0;
  bool balanced = false;
  std::size_t provenance_violations = 0;
  std::size_t overlap_violations = 0;  // objects sharing pixels or blocks
  std::size_t bbox_violations = 0;     // object box leaving its block
  std::size_t palette_violations = 0;  // pixel not a shade of its object's color
  std::size_t background_violations = 0;
  std::size_t meta_violations = 0;     // transform values outside the config sets
  std::size_t render_mismatches = 0;   // re-rendered image differs
  bool rendered = false;               // re-render check ran
  std::string hash;                    // SHA-256 of the dataset file bytes
  std::vector<std::string> problems;   // first few findings, human readable

  bool pass() const;
  nlohmann::json to_json() const;
  std::string summary() const;
};

// mnist, when given, enables digit identity checks and full re-rendering of
// MNIST Parity samples. Pentomino samples are always re-rendered.
AuditReport audit_dataset(const data::Dataset& ds, const data::MnistFiles* mnist = nullptr);
// Throws ValidationError when the sidecar is missing.
AuditReport audit_dataset(const std::filesystem::path& path, const data::MnistFiles* mnist = nullptr);

std::string dataset_hash(const data::Dataset& ds);

}  // namespace resmix::verify
