#include <cmath>
#include <random>

#include "doctest.h"
#include "pcaising/exact.hpp"
#include "pcaising/glauber.hpp"
#include "pcaising/kernel.hpp"
#include "pcaising/stats.hpp"

using namespace pcaising;

TEST_CASE("jump chain bookkeeping") {
  std::mt19937_64 rng(1);
  for (int L : {2, 3, 7}) {
    const TorusGeometry g(L);
    const auto params = PcaParameters::explicit_values(0.7, 0.0);
    SpinConfiguration start = SpinConfiguration::all_minus(L);
    for (int x = 0; x < L * L; ++x) {
      if (rng() & 1U) start.set(x, 1);
    }
    GlauberJumpChain chain(g, params, start);
    Engine engine(3);
    for (int k = 0; k < 300; ++k) {
      double direct = 0.0;
      for (int x = 0; x < L * L; ++x) direct += glauber_acceptance(g, params, chain.state(), x);
      REQUIRE(chain.flip_rate() == doctest::Approx(direct / (L * L)).epsilon(1e-13));
      REQUIRE(chain.plus_count() == chain.state().count_plus());
      const auto before = chain.state();
      CHECK(chain.jump(engine) >= 1);
      int changed = 0;
      for (int x = 0; x < L * L; ++x) changed += before.is_plus(x) != chain.state().is_plus(x);
      CHECK(changed == 1);
    }
  }
}

TEST_CASE("next flipped site follows the acceptance weights") {
  const TorusGeometry g(3);
  const auto params = PcaParameters::explicit_values(0.5, 0.0);
  auto start = SpinConfiguration::all_minus(3);
  start.set(0, 1);
  start.set(1, 1);
  start.set(4, 1);
  std::vector<double> acc(9);
  double total = 0.0;
  for (int x = 0; x < 9; ++x) total += acc[static_cast<std::size_t>(x)] = glauber_acceptance(g, params, start, x);
  Engine engine(12);
  GlauberJumpChain chain(g, params, start);
  std::vector<int> counts(9, 0);
  const int n = 60000;
  double held = 0.0;
  for (int k = 0; k < n; ++k) {
    chain.reset(start);
    held += static_cast<double>(chain.jump(engine));
    for (int x = 0; x < 9; ++x) {
      if (chain.state().is_plus(x) != start.is_plus(x)) counts[static_cast<std::size_t>(x)]++;
    }
  }
  for (int x = 0; x < 9; ++x) {
    const double p = acc[static_cast<std::size_t>(x)] / total;
    CHECK(std::fabs(counts[static_cast<std::size_t>(x)] / double(n) - p) <= 4 * std::sqrt(p * (1 - p) / n));
  }
  // mean holding time 1 / rate
  const double rate = total / 9;
  CHECK(std::fabs(held / n - 1 / rate) <= 4 * std::sqrt((1 - rate) / (rate * rate) / n));
}

TEST_CASE("lumped exact solve matches the full chain") {
  const TorusGeometry g(3);
  const auto params = PcaParameters::explicit_values(0.6, 0.0);
  const auto lumped = glauber_exact_tunneling(g, params);
  CHECK(lumped.orbits < 512);
  // unlumped: (I - K) h = 1 off the all-plus state
  const Eigen::MatrixXd K(exact::glauber_kernel(params, g));
  const int n = 511;  // all plus is the last code
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - K.topLeftCorner(n, n);
  const Eigen::VectorXd h = A.partialPivLu().solve(Eigen::VectorXd::Ones(n));
  CHECK(lumped.mean_steps == doctest::Approx(h(0)).epsilon(1e-9));
  // escape from one plus spin, harmonic between the two ground states
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(510, 510) - K.block(1, 1, 510, 510);
  const Eigen::VectorXd u = B.partialPivLu().solve(K.block(1, 511, 510, 1));
  CHECK(lumped.p_escape == doctest::Approx(u(0)).epsilon(1e-9));
  CHECK_THROWS(glauber_exact_tunneling(TorusGeometry(5), params));
}

TEST_CASE("tunneling estimates against exact values") {
  const TorusGeometry g(3);
  const auto params = PcaParameters::explicit_values(0.35, 0.0);
  const auto exact = glauber_exact_tunneling(g, params);
  const int n = 4000;
  double sum = 0.0, sum2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto t = glauber_hitting_time(g, params, SpinConfiguration::all_minus(3), derive_seed(4, k), 1LL << 40);
    REQUIRE(t.detected());
    sum += static_cast<double>(t.value);
    sum2 += static_cast<double>(t.value) * static_cast<double>(t.value);
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::fabs(mean - exact.mean_steps) <= 4 * se);

  // splitting plus renewal at L = 4, where the exact chain is still small
  const TorusGeometry g4(4);
  for (double J : {0.5, 0.9}) {
    const auto p4 = PcaParameters::explicit_values(J, 0.0);
    const auto ex = glauber_exact_tunneling(g4, p4);
    const auto est = glauber_tunneling_estimate(g4, p4, 7, {2000, 10'000'000}, 20000);
    CHECK_FALSE(std::isnan(est.log_p_escape));
    CHECK(std::fabs(est.log_p_escape - std::log(ex.p_escape)) <= 0.25);
    CHECK(std::fabs(est.log_mean_steps - std::log(ex.mean_steps)) <= 0.25);
    CHECK(est.mean_sweeps == doctest::Approx(est.mean_steps / 16));
  }
}

TEST_CASE("summary statistics and fits") {
  const std::vector<double> constant(10, 2.5);
  const auto s = stats::summarize(constant);
  CHECK(s.mean == 2.5);
  CHECK(s.stderr_mean == 0.0);
  CHECK(s.median == 2.5);

  std::mt19937_64 rng(5);
  std::vector<double> coin;
  for (int k = 0; k < 100000; ++k) coin.push_back(static_cast<double>(rng() & 1U));
  const auto c = stats::summarize(coin);
  CHECK(std::fabs(c.mean - 0.5) <= 4 * c.stderr_mean);

  const std::vector<double> L{8, 16, 32, 64};
  std::vector<double> cube, expo;
  for (double x : L) {
    cube.push_back(x * x * x);
    expo.push_back(std::pow(2.0, x));
  }
  const auto f = stats::loglog_fit(L, cube);
  CHECK(f.slope == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  // an exponential gives a slope that keeps growing with the window
  const std::vector<double> lo_x{8, 16}, hi_x{16, 32};
  const std::vector<double> lo_y{expo[0], expo[1]}, hi_y{expo[1], expo[2]};
  CHECK(stats::loglog_fit(hi_x, hi_y).slope > 1.5 * stats::loglog_fit(lo_x, lo_y).slope);
  CHECK(stats::loglog_fit(L, expo).r_squared < 0.95);
  const std::vector<double> repeated{8, 8, 8};
  CHECK_THROWS(stats::loglog_fit(repeated, std::vector<double>{1, 2, 3}));
  CHECK_THROWS(stats::loglog_fit(L, std::vector<double>{1, 2, -3, 4}));

  const auto ci = stats::wilson_interval(30, 100, 2.0);
  CHECK(ci.low < 0.3);
  CHECK(ci.high > 0.3);
  CHECK(stats::wilson_interval(0, 100, 4.0).low == 0.0);
  CHECK(stats::quantile_sorted(std::vector<double>{1, 2, 3, 4}, 0.5) == 2.5);
}
