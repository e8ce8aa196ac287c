#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace pcaising {

/// SplitMix64 finaliser; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Maps 64 random bits to a double strictly inside (0, 1).
constexpr double to_unit_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1p-53;
}

/// Seed of trial `index` derived from a master seed; distinct indices give
/// distinct streams.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

struct UniformWindow {
  double lower = 0.0;
  double upper = 1.0;
};

/// Counter-based family {U_x(n)}: the value at (site, step) depends only on
/// (seed, site, step). With a window (a, b) the value is a + u (b - a), kept
/// strictly inside (a, b) even after rounding.
class RandomField {
 public:
  explicit RandomField(std::uint64_t seed, std::optional<UniformWindow> window = std::nullopt);

  /// The zero-temperature window (w, 1 - w) for half-width w.
  static RandomField conditioned(std::uint64_t seed, double atypical_width);

  std::uint64_t seed() const noexcept { return seed_; }
  const std::optional<UniformWindow>& window() const noexcept { return window_; }

  std::uint64_t step_key(std::int64_t step) const noexcept {
    return mix64(key_ ^ mix64(static_cast<std::uint64_t>(step) * 0xD1B54A32D192ED03ULL));
  }

  double uniform_at(std::uint64_t step_key, int site) const noexcept {
    const double u = to_unit_open(mix64(step_key + static_cast<std::uint64_t>(site) * 0xA0761D6478BD642FULL));
    if (!window_) return u;
    const double v = window_->lower + u * (window_->upper - window_->lower);
    return v < inner_lower_ ? inner_lower_ : (v > inner_upper_ ? inner_upper_ : v);
  }

  double uniform(int site, std::int64_t step) const noexcept {
    return uniform_at(step_key(step), site);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::optional<UniformWindow> window_;
  double inner_lower_ = 0.0;
  double inner_upper_ = 1.0;
};

/// Sequential generator for everything that is not indexed by (site, step).
using Engine = std::mt19937_64;

inline double uniform01(Engine& engine) { return to_unit_open(engine()); }

/// Uniform integer in [0, n).
inline int uniform_index(Engine& engine, int n) {
  const int k = static_cast<int>(uniform01(engine) * n);
  return k < n ? k : n - 1;
}

}  // namespace pcaising
