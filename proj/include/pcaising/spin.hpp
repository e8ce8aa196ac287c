#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pcaising/lattice.hpp"
#include "pcaising/parameters.hpp"

namespace pcaising {

/// A +-1 spin per torus site, bit-packed row by row (bit set <=> spin +1).
/// Rows use ceil(L / 64) words, so one word per row whenever L <= 64.
class SpinConfiguration {
 public:
  SpinConfiguration() = default;

  static SpinConfiguration all_minus(int side);
  static SpinConfiguration all_plus(int side);

  /// Canonical encoding: bit i + L*j of the code is spin (i, j). Needs L^2 <= 64.
  static SpinConfiguration decode(int side, std::uint64_t code);
  std::uint64_t encode() const;

  /// L text lines of '+' / '-', row j = L-1 first.
  static SpinConfiguration from_text(std::string_view text);
  std::string to_text() const;

  int side() const noexcept { return side_; }
  int site_count() const noexcept { return side_ * side_; }
  int words_per_row() const noexcept { return words_per_row_; }

  bool is_plus(int index) const noexcept {
    const int i = index % side_;
    const int j = index / side_;
    return (bits_[word(i, j)] >> (i & 63)) & 1U;
  }
  int spin(int index) const noexcept { return is_plus(index) ? 1 : -1; }

  void set(int index, int spin) noexcept;
  void flip(int index) noexcept;
  SpinConfiguration flipped_at(int index) const;

  int count_plus() const noexcept;

  const std::uint64_t* row(int j) const noexcept { return bits_.data() + j * words_per_row_; }
  std::uint64_t* row(int j) noexcept { return bits_.data() + j * words_per_row_; }

  friend bool operator==(const SpinConfiguration&, const SpinConfiguration&) = default;

 private:
  explicit SpinConfiguration(int side);
  std::size_t word(int i, int j) const noexcept {
    return static_cast<std::size_t>(j * words_per_row_ + (i >> 6));
  }

  int side_ = 0;
  int words_per_row_ = 0;
  std::vector<std::uint64_t> bits_;
};

/// Componentwise order: a <= b iff a_x <= b_x at every site.
bool leq(const SpinConfiguration& a, const SpinConfiguration& b);

/// Push-forward by the horizontal shift: result at theta^n(x) equals sigma at x.
/// A diagonal configuration with diagonal spins xi becomes one with xi rotated
/// by n (xi'_{m+n} = xi_m); the zero-temperature dynamics is n -> shift by n.
SpinConfiguration horizontal_shift(const SpinConfiguration& sigma, int n);
/// Same as horizontal_shift, writing into `out` (resized when needed).
void horizontal_shift_into(const SpinConfiguration& sigma, int n, SpinConfiguration& out);

/// Peierls contour statistics. Bonds are the up and right bonds of each site.
struct ContourStats {
  int length = 0;
  int n_ur = 0;
  int n_dl = 0;
  int n_plus = 0;
  int diagonal_part_size = 0;
  int nondiagonal_part_size = 0;

  /// l - 2 n_ur: number of sites with exactly one of their up/right bonds in the contour.
  int nondiagonal_measure() const noexcept { return length - 2 * n_ur; }
};

ContourStats contour_stats(const TorusGeometry& geometry, const SpinConfiguration& sigma);

/// Bonds of the contour (sigma_x != sigma_y), in TorusGeometry::bonds() order.
std::vector<Bond> contour_bonds(const TorusGeometry& geometry, const SpinConfiguration& sigma);

/// Diagonals m whose whole staircase {x, x^u}, {x, x^r}, x in D_m, lies in the
/// contour. Their union is the diagonal part gamma_D.
std::vector<int> complete_diagonals(const TorusGeometry& geometry, const SpinConfiguration& sigma);

/// If sigma is constant on every diagonal, the diagonal spins xi_0..xi_{L-1}.
std::optional<std::vector<int>> is_diagonal(const TorusGeometry& geometry,
                                            const SpinConfiguration& sigma);

SpinConfiguration from_diagonal_spins(const TorusGeometry& geometry, const std::vector<int>& xi);

struct Discrepancy {
  Site site;
  int diagonal = 0;
};

/// The unique site opposite to every other spin of its diagonal, when sigma is
/// diagonal except for that site. Never unique for L = 2.
std::optional<Discrepancy> single_discrepancy(const TorusGeometry& geometry,
                                              const SpinConfiguration& sigma);

/// Natural log of f(sigma) normalised so that f(all plus) = 1.
struct ReweightingValue {
  double log_f = 0.0;
  double delta = 1.0;
};

/// Contour-count form of log f.
ReweightingValue log_f(const TorusGeometry& geometry, const SpinConfiguration& sigma,
                       const PcaParameters& params);

/// Same quantity from the site product prod_x (1 + delta phi_x), divided by its
/// value at the all-plus configuration.
double log_f_site_product(const TorusGeometry& geometry, const SpinConfiguration& sigma,
                          const PcaParameters& params);

}  // namespace pcaising
