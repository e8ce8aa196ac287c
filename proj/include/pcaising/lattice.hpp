#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace pcaising {

enum class Direction : std::uint8_t { up = 0, right = 1, down = 2, left = 3 };

inline constexpr std::array<Direction, 4> all_directions{Direction::up, Direction::right,
                                                         Direction::down, Direction::left};

/// Site (i, j) of the torus: i is the column, j the row.
struct Site {
  int i = 0;
  int j = 0;
  friend bool operator==(const Site&, const Site&) = default;
};

enum class BondOrientation : std::uint8_t { vertical = 0, horizontal = 1 };

/// A bond is identified by its lower/left endpoint and orientation: the
/// vertical bond of x joins x and x^u, the horizontal one joins x and x^r.
/// This gives exactly 2 L^2 bonds for every L, including L = 2 where the
/// torus has doubled edges.
struct Bond {
  int base = 0;  // linear site index
  BondOrientation orientation = BondOrientation::vertical;
  friend bool operator==(const Bond&, const Bond&) = default;
};

/// The discrete torus (Z/LZ)^2 with precomputed neighbor tables.
/// Sites are linearised as i + L*j.
class TorusGeometry {
 public:
  explicit TorusGeometry(int side);

  int side() const noexcept { return side_; }
  int site_count() const noexcept { return side_ * side_; }

  int index(Site x) const noexcept { return x.i + side_ * x.j; }
  Site site(int index) const noexcept { return {index % side_, index / side_}; }
  bool contains(Site x) const noexcept {
    return x.i >= 0 && x.i < side_ && x.j >= 0 && x.j < side_;
  }

  Site neighbor(Site x, Direction dir) const noexcept {
    return site(neighbor(index(x), dir));
  }
  int neighbor(int index, Direction dir) const noexcept {
    return neighbors_[static_cast<std::size_t>(dir)][static_cast<std::size_t>(index)];
  }

  /// Index m of the NW-SE diagonal D_m = {(i, j) : i + j = m mod L}.
  int diagonal_index(Site x) const noexcept { return (x.i + x.j) % side_; }
  int diagonal_index(int index) const noexcept { return diagonal_of_[static_cast<std::size_t>(index)]; }

  /// Horizontal shift (i, j) -> (i + 1, j). Maps D_m onto D_{m+1}.
  Site shift_site(Site x) const noexcept { return {(x.i + 1) % side_, x.j}; }
  Site shift_site(Site x, int n) const noexcept;

  /// Sites of D_m ordered by increasing column i.
  std::vector<int> diagonal_sites(int m) const;

  std::vector<Bond> bonds() const;
  std::pair<int, int> endpoints(Bond b) const noexcept;

 private:
  int side_;
  std::array<std::vector<int>, 4> neighbors_;
  std::vector<int> diagonal_of_;
};

inline int wrap(int value, int modulus) noexcept {
  const int r = value % modulus;
  return r < 0 ? r + modulus : r;
}

}  // namespace pcaising
