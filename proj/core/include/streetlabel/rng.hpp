#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace streetlabel {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Mixes a 64-bit value (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

/// Small deterministic generator (splitmix64 stream). Output is identical on
/// every platform, unlike the standard distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Independent stream for (seed, key, tag): per-pano, per-task draws do not
  /// depend on the order in which workers process panoramas.
  static Rng stream(std::uint64_t seed, std::string_view key, std::string_view tag);

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform01();
  /// Uniform in [lo, hi]. The upper bound is reached only in the limit.
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::uint64_t state_;
};

/// Lowercase hex of a 64-bit value, zero padded to 16 characters.
std::string hex64(std::uint64_t v);

}  // namespace streetlabel
