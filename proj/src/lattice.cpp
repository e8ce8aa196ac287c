#include "pcaising/lattice.hpp"

#include <stdexcept>
#include <string>

namespace pcaising {

TorusGeometry::TorusGeometry(int side) : side_(side) {
  if (side < 2) {
    throw std::invalid_argument("torus side must be at least 2, got " + std::to_string(side));
  }
  const int n = site_count();
  for (auto& table : neighbors_) table.resize(static_cast<std::size_t>(n));
  diagonal_of_.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      const auto x = static_cast<std::size_t>(i + side * j);
      neighbors_[0][x] = i + side * ((j + 1) % side);
      neighbors_[1][x] = (i + 1) % side + side * j;
      neighbors_[2][x] = i + side * ((j + side - 1) % side);
      neighbors_[3][x] = (i + side - 1) % side + side * j;
      diagonal_of_[x] = (i + j) % side;
    }
  }
}

Site TorusGeometry::shift_site(Site x, int n) const noexcept {
  return {wrap(x.i + n, side_), x.j};
}

std::vector<int> TorusGeometry::diagonal_sites(int m) const {
  std::vector<int> sites;
  sites.reserve(static_cast<std::size_t>(side_));
  m = wrap(m, side_);
  for (int i = 0; i < side_; ++i) sites.push_back(index({i, wrap(m - i, side_)}));
  return sites;
}

std::vector<Bond> TorusGeometry::bonds() const {
  std::vector<Bond> out;
  out.reserve(2 * static_cast<std::size_t>(site_count()));
  for (int x = 0; x < site_count(); ++x) {
    out.push_back({x, BondOrientation::vertical});
    out.push_back({x, BondOrientation::horizontal});
  }
  return out;
}

std::pair<int, int> TorusGeometry::endpoints(Bond b) const noexcept {
  const Direction d = b.orientation == BondOrientation::vertical ? Direction::up : Direction::right;
  return {b.base, neighbor(b.base, d)};
}

}  // namespace pcaising
