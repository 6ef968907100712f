#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace radar {

/// Seeded generator with platform-independent derived draws. Only the raw
/// mt19937_64 stream is used; distributions are computed here so results do
/// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  /// Draws an index with probability proportional to weights[i].
  std::size_t categorical(std::span<const double> weights);

  std::string save_state() const;
  void load_state(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; used to derive independent per-item seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace radar
