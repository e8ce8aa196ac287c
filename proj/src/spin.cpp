#include "pcaising/spin.hpp"

#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pcaising/numerics.hpp"

namespace pcaising {

namespace {

std::uint64_t low_mask(int bits) noexcept {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

void require_same_side(const SpinConfiguration& a, const SpinConfiguration& b) {
  if (a.side() != b.side()) throw std::invalid_argument("configurations have different sides");
}

void require_geometry(const TorusGeometry& g, const SpinConfiguration& s) {
  if (g.side() != s.side()) throw std::invalid_argument("configuration does not match geometry");
}

}  // namespace

SpinConfiguration::SpinConfiguration(int side)
    : side_(side),
      words_per_row_((side + 63) / 64),
      bits_(static_cast<std::size_t>(side) * static_cast<std::size_t>((side + 63) / 64), 0) {
  if (side < 2) throw std::invalid_argument("configuration side must be at least 2");
}

SpinConfiguration SpinConfiguration::all_minus(int side) { return SpinConfiguration(side); }

SpinConfiguration SpinConfiguration::all_plus(int side) {
  SpinConfiguration s(side);
  for (int j = 0; j < side; ++j) {
    for (int w = 0; w < s.words_per_row_; ++w) {
      s.row(j)[w] = low_mask(std::min(64, side - 64 * w));
    }
  }
  return s;
}

SpinConfiguration SpinConfiguration::decode(int side, std::uint64_t code) {
  if (side * side > 64) throw std::invalid_argument("canonical encoding needs L^2 <= 64");
  SpinConfiguration s(side);
  for (int j = 0; j < side; ++j) s.row(j)[0] = (code >> (side * j)) & low_mask(side);
  return s;
}

std::uint64_t SpinConfiguration::encode() const {
  if (side_ * side_ > 64) throw std::invalid_argument("canonical encoding needs L^2 <= 64");
  std::uint64_t code = 0;
  for (int j = 0; j < side_; ++j) code |= row(j)[0] << (side_ * j);
  return code;
}

SpinConfiguration SpinConfiguration::from_text(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  const int side = static_cast<int>(lines.size());
  if (side < 2) throw std::invalid_argument("configuration text needs at least 2 rows");
  SpinConfiguration s(side);
  for (int r = 0; r < side; ++r) {
    const std::string& l = lines[static_cast<std::size_t>(r)];
    if (static_cast<int>(l.size()) != side) {
      throw std::invalid_argument("configuration text is not square");
    }
    const int j = side - 1 - r;
    for (int i = 0; i < side; ++i) {
      if (l[static_cast<std::size_t>(i)] == '+') {
        s.set(i + side * j, 1);
      } else if (l[static_cast<std::size_t>(i)] != '-') {
        throw std::invalid_argument("configuration text may only contain '+' and '-'");
      }
    }
  }
  return s;
}

std::string SpinConfiguration::to_text() const {
  std::string out;
  out.reserve(static_cast<std::size_t>(side_ * (side_ + 1)));
  for (int j = side_ - 1; j >= 0; --j) {
    for (int i = 0; i < side_; ++i) out.push_back(is_plus(i + side_ * j) ? '+' : '-');
    out.push_back('\n');
  }
  return out;
}

void SpinConfiguration::set(int index, int spin) noexcept {
  const int i = index % side_;
  const int j = index / side_;
  const std::uint64_t bit = std::uint64_t{1} << (i & 63);
  if (spin > 0) {
    bits_[word(i, j)] |= bit;
  } else {
    bits_[word(i, j)] &= ~bit;
  }
}

void SpinConfiguration::flip(int index) noexcept {
  const int i = index % side_;
  const int j = index / side_;
  bits_[word(i, j)] ^= std::uint64_t{1} << (i & 63);
}

SpinConfiguration SpinConfiguration::flipped_at(int index) const {
  SpinConfiguration s = *this;
  s.flip(index);
  return s;
}

int SpinConfiguration::count_plus() const noexcept {
  int n = 0;
  for (std::uint64_t w : bits_) n += std::popcount(w);
  return n;
}

bool leq(const SpinConfiguration& a, const SpinConfiguration& b) {
  require_same_side(a, b);
  const int words = a.side() * a.words_per_row();
  const std::uint64_t* pa = a.row(0);
  const std::uint64_t* pb = b.row(0);
  for (int w = 0; w < words; ++w) {
    if ((pa[w] & ~pb[w]) != 0) return false;
  }
  return true;
}

SpinConfiguration horizontal_shift(const SpinConfiguration& sigma, int n) {
  SpinConfiguration out;
  horizontal_shift_into(sigma, n, out);
  return out;
}

void horizontal_shift_into(const SpinConfiguration& sigma, int n, SpinConfiguration& out) {
  const int side = sigma.side();
  n = wrap(n, side);
  if (n == 0) {
    out = sigma;
    return;
  }
  if (out.side() != side) out = SpinConfiguration::all_minus(side);
  if (sigma.words_per_row() == 1) {
    const std::uint64_t mask = low_mask(side);
    for (int j = 0; j < side; ++j) {
      const std::uint64_t a = sigma.row(j)[0];
      out.row(j)[0] = ((a << n) | (a >> (side - n))) & mask;
    }
    return;
  }
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) out.set((i + n) % side + side * j, sigma.spin(i + side * j));
  }
}

ContourStats contour_stats(const TorusGeometry& g, const SpinConfiguration& sigma) {
  require_geometry(g, sigma);
  ContourStats st;
  const int n = g.site_count();
  std::vector<char> ur_elbow(static_cast<std::size_t>(n), 0);
  for (int x = 0; x < n; ++x) {
    const bool s = sigma.is_plus(x);
    const bool up = s != sigma.is_plus(g.neighbor(x, Direction::up));
    const bool right = s != sigma.is_plus(g.neighbor(x, Direction::right));
    const bool down = s != sigma.is_plus(g.neighbor(x, Direction::down));
    const bool left = s != sigma.is_plus(g.neighbor(x, Direction::left));
    st.length += static_cast<int>(up) + static_cast<int>(right);
    if (up && right) {
      ++st.n_ur;
      ur_elbow[static_cast<std::size_t>(x)] = 1;
    }
    if (down && left) ++st.n_dl;
    if (s) ++st.n_plus;
  }
  for (int m = 0; m < g.side(); ++m) {
    bool complete = true;
    for (int x : g.diagonal_sites(m)) complete = complete && ur_elbow[static_cast<std::size_t>(x)];
    if (complete) st.diagonal_part_size += 2 * g.side();
  }
  st.nondiagonal_part_size = st.length - st.diagonal_part_size;
  return st;
}

std::vector<Bond> contour_bonds(const TorusGeometry& g, const SpinConfiguration& sigma) {
  require_geometry(g, sigma);
  std::vector<Bond> out;
  for (const Bond& b : g.bonds()) {
    const auto [x, y] = g.endpoints(b);
    if (sigma.is_plus(x) != sigma.is_plus(y)) out.push_back(b);
  }
  return out;
}

std::vector<int> complete_diagonals(const TorusGeometry& g, const SpinConfiguration& sigma) {
  require_geometry(g, sigma);
  std::vector<int> out;
  for (int m = 0; m < g.side(); ++m) {
    bool complete = true;
    for (int x : g.diagonal_sites(m)) {
      const bool s = sigma.is_plus(x);
      complete = complete && s != sigma.is_plus(g.neighbor(x, Direction::up)) &&
                 s != sigma.is_plus(g.neighbor(x, Direction::right));
    }
    if (complete) out.push_back(m);
  }
  return out;
}

std::optional<std::vector<int>> is_diagonal(const TorusGeometry& g, const SpinConfiguration& sigma) {
  require_geometry(g, sigma);
  std::vector<int> xi(static_cast<std::size_t>(g.side()));
  for (int m = 0; m < g.side(); ++m) {
    const std::vector<int> sites = g.diagonal_sites(m);
    const bool first = sigma.is_plus(sites.front());
    for (int x : sites) {
      if (sigma.is_plus(x) != first) return std::nullopt;
    }
    xi[static_cast<std::size_t>(m)] = first ? 1 : -1;
  }
  return xi;
}

SpinConfiguration from_diagonal_spins(const TorusGeometry& g, const std::vector<int>& xi) {
  if (static_cast<int>(xi.size()) != g.side()) {
    throw std::invalid_argument("diagonal spin vector must have length L");
  }
  SpinConfiguration s = SpinConfiguration::all_minus(g.side());
  for (int x = 0; x < g.site_count(); ++x) {
    if (xi[static_cast<std::size_t>(g.diagonal_index(x))] > 0) s.set(x, 1);
  }
  return s;
}

std::optional<Discrepancy> single_discrepancy(const TorusGeometry& g,
                                              const SpinConfiguration& sigma) {
  require_geometry(g, sigma);
  const int side = g.side();
  if (side < 3) return std::nullopt;
  std::optional<Discrepancy> found;
  for (int m = 0; m < side; ++m) {
    const std::vector<int> sites = g.diagonal_sites(m);
    int plus = 0;
    for (int x : sites) plus += sigma.is_plus(x) ? 1 : 0;
    if (plus == 0 || plus == side) continue;
    if (found || (plus != 1 && plus != side - 1)) return std::nullopt;
    const bool minority_is_plus = plus == 1;
    for (int x : sites) {
      if (sigma.is_plus(x) == minority_is_plus) found = Discrepancy{g.site(x), m};
    }
  }
  return found;
}

ReweightingValue log_f(const TorusGeometry& g, const SpinConfiguration& sigma,
                       const PcaParameters& params) {
  const ContourStats st = contour_stats(g, sigma);
  const double J = params.J();
  const double log_delta = -2.0 * params.q();
  // log(1 + delta e^{a}) = softplus(a + log delta)
  const double base = numerics::softplus(-4.0 * J + log_delta);
  const double elbow = numerics::softplus(4.0 * J + log_delta) - base;
  const double single = numerics::softplus(log_delta) - base;
  ReweightingValue v;
  v.delta = params.delta();
  v.log_f = st.n_ur * elbow + st.nondiagonal_measure() * single;
  return v;
}

double log_f_site_product(const TorusGeometry& g, const SpinConfiguration& sigma,
                          const PcaParameters& params) {
  require_geometry(g, sigma);
  const double J = params.J();
  const double log_delta = -2.0 * params.q();
  double acc = 0.0;
  for (int x = 0; x < g.site_count(); ++x) {
    const int s = sigma.spin(x);
    const int align = s * sigma.spin(g.neighbor(x, Direction::up)) +
                      s * sigma.spin(g.neighbor(x, Direction::right));
    // log(1 + delta phi_x), phi_x = e^{-2J (s s^u + s s^r)}
    acc += numerics::softplus(log_delta - 2.0 * J * align);
  }
  return acc - g.site_count() * numerics::softplus(log_delta - 4.0 * J);
}

}  // namespace pcaising
