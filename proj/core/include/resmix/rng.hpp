#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace resmix {

// SplitMix64 finalizer; used to derive stream seeds from structured keys.
std::uint64_t mix64(std::uint64_t x);

// Order-sensitive combination of a seed with further key material.
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);
std::uint64_t hash_combine(std::uint64_t seed, std::string_view tag);

// xoshiro256** with platform-independent distributions. The std::
// distributions are implementation-defined, so they are not used anywhere a
// reproducible stream is required.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  // Derives an independent stream: Rng::stream(seed, "init"), or with an
  // additional numeric key (split id, sample index, epoch).
  static Rng stream(std::uint64_t seed, std::string_view name);
  static Rng stream(std::uint64_t seed, std::string_view name, std::uint64_t a);
  static Rng stream(std::uint64_t seed, std::string_view name, std::uint64_t a,
                    std::uint64_t b);

  std::uint64_t next();
  std::uint64_t operator()() { return next(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

  // Uniform integer in [0, bound), bound > 0. Unbiased (rejection).
  std::uint64_t below(std::uint64_t bound);
  // Uniform integer in [lo, hi] inclusive.
  std::int64_t range(std::int64_t lo, std::int64_t hi);
  // Uniform double in [0, 1) with 53 random bits.
  double uniform();
  // Standard normal via Box-Muller (one value per call, no caching).
  double normal();

  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace resmix
