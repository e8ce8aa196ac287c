#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pcaising/spin.hpp"

using namespace pcaising;

namespace {

SpinConfiguration random_config(int L, std::mt19937_64& rng) {
  SpinConfiguration s = SpinConfiguration::all_minus(L);
  for (int x = 0; x < L * L; ++x) s.set(x, (rng() & 1U) ? 1 : -1);
  return s;
}

oracle::Grid to_grid(const SpinConfiguration& s) {
  oracle::Grid g{s.side(), std::vector<int>(static_cast<std::size_t>(s.site_count()))};
  for (int x = 0; x < s.site_count(); ++x) g.s[static_cast<std::size_t>(x)] = s.spin(x);
  return g;
}

}  // namespace

TEST_CASE("constant configurations and single flips") {
  CHECK(SpinConfiguration::all_plus(3).count_plus() == 9);
  CHECK(SpinConfiguration::all_minus(3).count_plus() == 0);
  const auto p = SpinConfiguration::all_plus(5);
  CHECK(p.flipped_at(7).count_plus() == 24);
  CHECK(p.flipped_at(7).flipped_at(7) == p);
  const auto wide = SpinConfiguration::all_plus(70);
  CHECK(wide.words_per_row() == 2);
  CHECK(wide.count_plus() == 4900);
}

TEST_CASE("componentwise order") {
  std::mt19937_64 rng(11);
  const auto bottom = SpinConfiguration::all_minus(4);
  const auto top = SpinConfiguration::all_plus(4);
  for (int r = 0; r < 50; ++r) {
    const auto s = random_config(4, rng);
    CHECK(leq(bottom, s));
    CHECK(leq(s, top));
    CHECK(leq(s, s));
  }
  const auto a = bottom.flipped_at(0);
  const auto b = bottom.flipped_at(5);
  CHECK_FALSE(leq(a, b));
  CHECK_FALSE(leq(b, a));

  // antisymmetry and transitivity on all of L = 2
  for (std::uint64_t x = 0; x < 16; ++x) {
    for (std::uint64_t y = 0; y < 16; ++y) {
      const auto sx = SpinConfiguration::decode(2, x);
      const auto sy = SpinConfiguration::decode(2, y);
      CHECK(leq(sx, sy) == ((x & ~y) == 0));
      if (leq(sx, sy) && leq(sy, sx)) CHECK(x == y);
      for (std::uint64_t z = 0; z < 16; ++z) {
        const auto sz = SpinConfiguration::decode(2, z);
        if (leq(sx, sy) && leq(sy, sz)) CHECK(leq(sx, sz));
      }
    }
  }
}

TEST_CASE("text and integer encodings round-trip") {
  std::mt19937_64 rng(5);
  for (int L : {2, 3, 5, 8, 65}) {
    const auto s = random_config(L, rng);
    CHECK(SpinConfiguration::from_text(s.to_text()) == s);
    if (L * L <= 64) CHECK(SpinConfiguration::decode(L, s.encode()) == s);
  }
  const auto t = SpinConfiguration::from_text("+-\n--\n");
  // top text row is j = 1, so the plus spin sits at (0, 1)
  CHECK(t.is_plus(0 + 2 * 1));
  CHECK(t.count_plus() == 1);
  CHECK(SpinConfiguration::decode(2, 0b0100).to_text() == "+-\n--\n");
  CHECK_THROWS(SpinConfiguration::from_text("+-\n-\n"));
  CHECK_THROWS(SpinConfiguration::from_text("+x\n--\n"));
}

TEST_CASE("contour statistics of small examples") {
  const TorusGeometry g3(3);
  const auto plus = SpinConfiguration::all_plus(3);
  const auto st0 = contour_stats(g3, plus);
  CHECK(st0.length == 0);
  CHECK(st0.n_ur == 0);
  CHECK(st0.n_dl == 0);

  for (int L = 3; L <= 6; ++L) {
    const TorusGeometry g(L);
    const auto single = SpinConfiguration::all_minus(L).flipped_at(L + 1);
    const auto st = contour_stats(g, single);
    CHECK(st.length == 4);
    CHECK(st.n_ur == 1);
    CHECK(st.n_dl == 1);

    std::vector<int> xi(static_cast<std::size_t>(L), -1);
    xi[0] = 1;
    const auto diag = from_diagonal_spins(g, xi);
    const auto sd = contour_stats(g, diag);
    CHECK(sd.length == 4 * L);
    CHECK(sd.n_ur == 2 * L);
    CHECK(sd.n_dl == 2 * L);
    CHECK(sd.nondiagonal_part_size == 0);
    CHECK(sd.diagonal_part_size == 4 * L);
  }
}

TEST_CASE("contour statistics agree with coordinate oracle") {
  std::mt19937_64 rng(2024);
  for (int L = 2; L <= 9; ++L) {
    const TorusGeometry g(L);
    for (int r = 0; r < 200; ++r) {
      const auto s = random_config(L, rng);
      const auto st = contour_stats(g, s);
      const auto ref = oracle::contour_counts(to_grid(s));
      CHECK(st.length == ref.length);
      CHECK(st.n_ur == ref.n_ur);
      CHECK(st.n_dl == ref.n_dl);
      CHECK(st.n_plus == s.count_plus());
      CHECK(st.diagonal_part_size + st.nondiagonal_part_size == st.length);
      CHECK(contour_bonds(g, s).size() == static_cast<std::size_t>(st.length));
    }
  }
}

TEST_CASE("n_dl equals n_ur on random configurations") {
  std::mt19937_64 rng(77);
  for (int L = 2; L <= 8; ++L) {
    const TorusGeometry g(L);
    int violations = 0;
    for (int r = 0; r < 10000; ++r) {
      const auto st = contour_stats(g, random_config(L, rng));
      violations += st.n_dl != st.n_ur;
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("single flips preserve n_dl - n_ur") {
  std::mt19937_64 rng(78);
  for (int L = 2; L <= 8; ++L) {
    const TorusGeometry g(L);
    for (int r = 0; r < 500; ++r) {
      const auto s = random_config(L, rng);
      const int x = static_cast<int>(rng() % static_cast<std::uint64_t>(L * L));
      const auto a = contour_stats(g, s);
      const auto b = contour_stats(g, s.flipped_at(x));
      CHECK(a.n_dl - a.n_ur == b.n_dl - b.n_ur);
    }
  }
}

TEST_CASE("diagonal part matches subset search at small L") {
  // exhaustive at L = 2, 3 and all of L = 4
  for (int L = 2; L <= 4; ++L) {
    const TorusGeometry g(L);
    const std::uint64_t n = std::uint64_t{1} << (L * L);
    for (std::uint64_t c = 0; c < n; ++c) {
      const auto s = SpinConfiguration::decode(L, c);
      const auto st = contour_stats(g, s);
      const int ref = oracle::diagonal_part_by_subsets(oracle::Grid::from_code(L, c));
      REQUIRE(st.diagonal_part_size == ref);
      CHECK((st.nondiagonal_measure() == 0) == (st.nondiagonal_part_size == 0));
      CHECK(st.nondiagonal_measure() >= 0);
    }
  }
}

TEST_CASE("diagonal configurations") {
  const TorusGeometry g(5);
  const auto minus = is_diagonal(g, SpinConfiguration::all_minus(5));
  REQUIRE(minus.has_value());
  CHECK(*minus == std::vector<int>(5, -1));

  std::vector<int> xi{1, -1, -1, -1, -1};
  const auto d0 = from_diagonal_spins(g, xi);
  const auto back = is_diagonal(g, d0);
  REQUIRE(back.has_value());
  CHECK(*back == xi);
  CHECK_FALSE(is_diagonal(g, SpinConfiguration::all_minus(5).flipped_at(3)).has_value());
  CHECK(complete_diagonals(g, d0) == std::vector<int>{0, 4});
}

TEST_CASE("single discrepancy detection") {
  const TorusGeometry g(5);
  const auto minus = SpinConfiguration::all_minus(5);
  for (int x = 0; x < 25; ++x) {
    const auto d = single_discrepancy(g, minus.flipped_at(x));
    REQUIRE(d.has_value());
    CHECK(d->site == g.site(x));
    CHECK(d->diagonal == g.diagonal_index(x));
  }
  CHECK_FALSE(single_discrepancy(g, minus).has_value());
  const auto sites = g.diagonal_sites(2);
  CHECK_FALSE(single_discrepancy(g, minus.flipped_at(sites[0]).flipped_at(sites[1])).has_value());
  // a full diagonal with one site missing is a minus discrepancy inside a plus diagonal
  std::vector<int> xi{-1, -1, 1, -1, -1};
  const auto holed = from_diagonal_spins(g, xi).flipped_at(sites[3]);
  const auto d = single_discrepancy(g, holed);
  REQUIRE(d.has_value());
  CHECK(d->site == g.site(sites[3]));
  // two defects on different diagonals
  CHECK_FALSE(single_discrepancy(g, minus.flipped_at(0).flipped_at(1)).has_value());
}

TEST_CASE("horizontal shift of configurations") {
  std::mt19937_64 rng(9);
  for (int L : {3, 7, 66}) {
    const TorusGeometry g(L);
    const auto s = random_config(L, rng);
    CHECK(horizontal_shift(s, L) == s);
    CHECK(horizontal_shift(horizontal_shift(s, 1), -1) == s);
    CHECK(horizontal_shift(horizontal_shift(s, 2), 3) == horizontal_shift(s, 5));
    const auto t = horizontal_shift(s, 1);
    for (int x = 0; x < g.site_count(); ++x) {
      CHECK(t.spin(g.index(g.shift_site(g.site(x)))) == s.spin(x));
    }
  }
  const TorusGeometry g(6);
  std::vector<int> xi{1, -1, 1, 1, -1, -1};
  const auto rotated = is_diagonal(g, horizontal_shift(from_diagonal_spins(g, xi), 1));
  REQUIRE(rotated.has_value());
  for (int m = 0; m < 6; ++m) {
    CHECK((*rotated)[static_cast<std::size_t>((m + 1) % 6)] == xi[static_cast<std::size_t>(m)]);
  }
}

TEST_CASE("log f values") {
  const auto params = PcaParameters::explicit_values(1.3, 0.4);
  const TorusGeometry g(3);
  CHECK(log_f(g, SpinConfiguration::all_plus(3), params).log_f == doctest::Approx(0.0));
  CHECK(log_f(g, SpinConfiguration::all_minus(3), params).log_f == doctest::Approx(0.0));
  const double J = params.J();
  const double delta = std::exp(-2.0 * params.q());
  const double expected = std::log(1 + delta * std::exp(4 * J)) + 2 * std::log(1 + delta) -
                          3 * std::log(1 + delta * std::exp(-4 * J));
  const auto single = SpinConfiguration::all_minus(3).flipped_at(4);
  CHECK(log_f(g, single, params).log_f == doctest::Approx(expected).epsilon(1e-13));
  CHECK(log_f(g, single, params).delta == doctest::Approx(delta));

  // site product from its definition, independent of the library helper
  double direct = 0.0;
  double at_plus = 0.0;
  const auto grid = to_grid(single);
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      const int s = grid.at(i, j);
      const double phi = std::exp(-2 * J * (s * grid.at(i, j + 1) + s * grid.at(i + 1, j)));
      direct += std::log(1 + delta * phi);
      at_plus += std::log(1 + delta * std::exp(-4 * J));
    }
  }
  CHECK(direct - at_plus == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("log f routes agree on random configurations") {
  std::mt19937_64 rng(3);
  for (int L : {2, 3, 5, 8, 16, 33, 64}) {
    const TorusGeometry g(L);
    for (double J : {0.2, 1.0, 2.5}) {
      for (double q : {0.0, 0.1, 0.7}) {
        const auto params = PcaParameters::explicit_values(J, q);
        for (int r = 0; r < 10; ++r) {
          const auto s = random_config(L, rng);
          const double a = log_f(g, s, params).log_f;
          const double b = log_f_site_product(g, s, params);
          CHECK(std::fabs(a - b) <= 1e-10 * L * L);
          CHECK(a >= -1e-12);
        }
      }
    }
  }
}

TEST_CASE("log f stays finite at large coupling") {
  const auto params = PcaParameters::explicit_values(500.0, 0.3);
  const TorusGeometry g(8);
  const auto v = log_f(g, SpinConfiguration::all_minus(8).flipped_at(9), params);
  CHECK(std::isfinite(v.log_f));
  CHECK(v.log_f > 1000.0);
}
