#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pcaising/coupling.hpp"
#include "pcaising/exact.hpp"

using namespace pcaising;

namespace {

SpinConfiguration random_configuration(int L, std::mt19937_64& rng) {
  SpinConfiguration s = SpinConfiguration::all_minus(L);
  for (int x = 0; x < L * L; ++x) {
    if (rng() & 1U) s.set(x, 1);
  }
  return s;
}

std::vector<int> random_xi(int L, std::mt19937_64& rng) {
  std::vector<int> xi(static_cast<std::size_t>(L));
  for (int& v : xi) v = (rng() & 1U) ? 1 : -1;
  return xi;
}

// eta(n) diagonal plus counts recomputed from scratch
std::vector<int> eta_counts(const TorusGeometry& g, const SpinConfiguration& sigma, std::int64_t n) {
  const auto eta = horizontal_shift(sigma, static_cast<int>(-(n % g.side())));
  std::vector<int> counts(static_cast<std::size_t>(g.side()), 0);
  for (int x = 0; x < g.site_count(); ++x) counts[static_cast<std::size_t>(g.diagonal_index(x))] += eta.is_plus(x);
  return counts;
}

class ScanObserver : public TrialObserver {
 public:
  ScanObserver(const TorusGeometry& g, const SpinConfiguration& start) : g_(g), tracker_(g, start) {}
  void on_step(std::int64_t n, const SpinConfiguration& before, const SpinConfiguration& after,
               const StepSummary&) override {
    tracker_.advance(before, after);
    if (tracker_.is_diagonal() != is_diagonal(g_, after).has_value()) ++mismatches;
    if (tracker_.is_all_plus() != (after == SpinConfiguration::all_plus(g_.side()))) ++mismatches;
    const auto counts = eta_counts(g_, after, n);
    for (int m = 0; m < g_.side(); ++m) mismatches += counts[static_cast<std::size_t>(m)] != tracker_.eta_plus(m);
    diagonal_steps += tracker_.is_diagonal();
    ++steps;
  }
  int mismatches = 0;
  int diagonal_steps = 0;
  int steps = 0;

 private:
  TorusGeometry g_;
  DiagonalTracker tracker_;
};

class ShiftObserver : public TrialObserver {
 public:
  explicit ShiftObserver(const SpinConfiguration& start) : start_(start) {}
  void on_step(std::int64_t n, const SpinConfiguration&, const SpinConfiguration& after,
               const StepSummary& summary) override {
    if (after != horizontal_shift(start_, static_cast<int>(n % start_.side()))) ++departures;
    atypical += summary.atypical_count;
  }
  int departures = 0;
  int atypical = 0;

 private:
  SpinConfiguration start_;
};

bool same_time(const StoppingTime& a, const StoppingTime& b) {
  return a.censored == b.censored && (a.censored || a.value == b.value);
}

}  // namespace

TEST_CASE("incremental diagonal tracking matches a full scan") {
  std::mt19937_64 rng(41);
  for (int L : {3, 5, 8, 70}) {
    const TorusGeometry g(L);
    const auto params = PcaParameters::explicit_values(1.1, 0.3);
    // from a random configuration and from a diagonal one
    for (int variant = 0; variant < 2; ++variant) {
      const SpinConfiguration start =
          variant == 0 ? random_configuration(L, rng) : from_diagonal_spins(g, random_xi(L, rng));
      ScanObserver scan(g, start);
      TrialOptions opts;
      opts.budget = L > 10 ? 60 : 400;
      run_trial(g, params, start, 1000 + L + variant, opts, &scan);
      CHECK(scan.steps == opts.budget);
      CHECK(scan.mismatches == 0);
      if (L <= 5) CHECK(scan.diagonal_steps > 0);
    }
  }
}

TEST_CASE("zero-temperature trial from a diagonal start is a pure shift") {
  std::mt19937_64 rng(5);
  for (int L : {4, 9, 64, 66}) {
    const TorusGeometry g(L);
    const auto params = PcaParameters::explicit_values(0.9, 0.2);
    const auto start = from_diagonal_spins(g, random_xi(L, rng));
    ShiftObserver obs(start);
    TrialOptions opts;
    opts.budget = 300;
    opts.windowed = true;
    const auto rec = run_trial(g, params, start, 77, opts, &obs);
    CHECK(obs.departures == 0);
    CHECK(obs.atypical == 0);
    CHECK(rec.S.censored);
    CHECK(rec.T.censored);
    CHECK(rec.S_shift.censored);
    CHECK(rec.atypical_events == 0);
    CHECK(rec.R.detected());
    CHECK(rec.R.value == 1);
    CHECK(rec.steps_run == 300);
    CHECK(rec.ladder.empty());
  }
}

TEST_CASE("T_one is a first hit at n >= 1") {
  const TorusGeometry g(6);
  const auto params = PcaParameters::explicit_values(1.5, 0.1);
  TrialOptions opts;
  opts.budget = 5;
  opts.windowed = true;
  opts.stop_at_T_one = true;
  const auto rec = run_trial(g, params, SpinConfiguration::all_plus(6), 3, opts);
  CHECK(rec.T_one.detected());
  CHECK(rec.T_one.value == 1);
  CHECK(rec.steps_run == 1);
  const auto never = run_trial(g, params, SpinConfiguration::all_minus(6), 3, opts);
  CHECK(never.T_one.censored);
  CHECK(never.steps_run == 5);
}

TEST_CASE("trials are deterministic and times are ordered") {
  const TorusGeometry g(8);
  const auto params = PcaParameters::explicit_values(1.0, 0.05);
  std::mt19937_64 rng(9);
  int shift_disagreements = 0;
  for (int k = 0; k < 200; ++k) {
    const auto start = from_diagonal_spins(g, random_xi(8, rng));
    TrialOptions opts;
    opts.budget = 300;
    const auto a = run_trial(g, params, start, 500 + k, opts);
    const auto b = run_trial(g, params, start, 500 + k, opts);
    REQUIRE(same_time(a.S, b.S));
    REQUIRE(same_time(a.T, b.T));
    REQUIRE(same_time(a.R, b.R));
    REQUIRE(same_time(a.T_one, b.T_one));
    REQUIRE(a.ladder.size() == b.ladder.size());
    REQUIRE(a.atypical_events == b.atypical_events);
    CHECK(a.diagonal_start);
    if (a.T.detected()) {
      REQUIRE(a.S.detected());
      CHECK(a.S.value <= a.T.value);
    }
    if (a.S.detected() && a.S_window.detected()) CHECK(a.S_window.value <= a.S.value);
    shift_disagreements += !same_time(a.S, a.S_shift);
    // ladder alternates S_1 < R_1 < S_2 < ...
    std::int64_t last = 0;
    for (const auto& rung : a.ladder) {
      CHECK(rung.exit > last);
      if (rung.return_to.censored) break;
      CHECK(rung.return_to.value > rung.exit);
      last = rung.return_to.value;
    }
    if (!a.ladder.empty()) CHECK(a.ladder.front().exit >= a.S.value);
  }
  CHECK(shift_disagreements == 0);
}

TEST_CASE("ladder is well formed for a diagonal start") {
  const TorusGeometry g(6);
  const auto params = PcaParameters::explicit_values(0.8, 0.2);
  const auto start = SpinConfiguration::all_minus(6);
  struct Membership : TrialObserver {
    explicit Membership(const TorusGeometry& g) : g(g) {}
    void on_step(std::int64_t, const SpinConfiguration&, const SpinConfiguration& after,
                 const StepSummary&) override {
      diagonal.push_back(is_diagonal(g, after).has_value());
    }
    TorusGeometry g;
    std::vector<bool> diagonal;
  } obs(g);
  TrialOptions opts;
  opts.budget = 2000;
  const auto rec = run_trial(g, params, start, 2024, opts, &obs);
  REQUIRE(rec.ladder.size() > 3);
  for (const auto& rung : rec.ladder) {
    const auto exit = static_cast<std::size_t>(rung.exit - 1);
    CHECK_FALSE(obs.diagonal[exit]);
    if (exit > 0) CHECK(obs.diagonal[exit - 1]);
    if (rung.return_to.censored) continue;
    const auto back = static_cast<std::size_t>(rung.return_to.value - 1);
    CHECK(obs.diagonal[back]);
    for (std::size_t n = exit; n < back; ++n) CHECK_FALSE(obs.diagonal[n]);
  }
  // stopping after a number of returns
  opts.stop_after_rungs = 2;
  const auto short_rec = run_trial(g, params, start, 2024, opts);
  REQUIRE(short_rec.ladder.size() == 2);
  CHECK(short_rec.steps_run == short_rec.ladder[1].return_to.value);
}

TEST_CASE("first atypical time has the closed-form hazard") {
  const TorusGeometry g(8);
  const auto params = PcaParameters::explicit_values(1.0, 0.05);
  std::mt19937_64 rng(3);
  const auto xi = random_xi(8, rng);
  const auto start = from_diagonal_spins(g, xi);
  // oracle hazard straight from the per-site atypical probabilities
  std::vector<double> a;
  for (int j = 0; j < 8; ++j) {
    for (int i = 0; i < 8; ++i) {
      const int v = xi[static_cast<std::size_t>((i + j + 7) % 8)];
      a.push_back(oracle::atypical_prob(1.0, 0.05, v, xi[static_cast<std::size_t>((i + j) % 8)]));
    }
  }
  const auto [h, h2] = oracle::at_least_one_two(a);
  CHECK(atypical_hazard(g, params, start) == doctest::Approx(h).epsilon(1e-12));
  // shifted diagonal configurations keep the same hazard
  CHECK(atypical_hazard(g, params, horizontal_shift(start, 3)) == doctest::Approx(h).epsilon(1e-12));

  const int seeds = 10000;
  double at_risk = 0.0;
  int events = 0;
  int both = 0;
  int equal = 0;
  TrialOptions opts;
  opts.budget = 200;
  opts.stop_at_S = true;
  std::vector<TrajectoryRecord> records;
  for (int s = 0; s < seeds; ++s) {
    auto rec = run_trial(g, params, start, derive_seed(12, s), opts);
    REQUIRE(rec.S.detected());
    at_risk += static_cast<double>(rec.S.value);
    ++events;
    if (rec.T.detected()) {
      ++both;
      equal += rec.T.value == rec.S.value;
    }
    records.push_back(std::move(rec));
  }
  const double h_hat = events / at_risk;
  const double se = std::sqrt(h * (1 - h) / at_risk);
  CHECK(std::fabs(h_hat - h) <= 4 * se);
  // first atypical step has two or more updates with probability P(>=2)/P(>=1)
  const double p_ts = h2 / h;
  const double p_hat = static_cast<double>(equal) / seeds;
  CHECK(std::fabs(p_hat - p_ts) <= 4 * std::sqrt(p_ts * (1 - p_ts) / seeds));
  const auto st = time_statistics(records);
  CHECK(st.S.n_uncensored == seeds);
  CHECK(st.s_seen == seeds);
  CHECK(st.p_t_equals_s * st.s_seen == doctest::Approx(equal));
  CHECK(st.shift_disagreements == 0);
  CHECK(equal < seeds - equal);  // P(T = S) < P(T > S)
}

TEST_CASE("coupled pairs") {
  const TorusGeometry g(16);
  const auto params = PcaParameters::explicit_values(0.9, 0.2);
  std::mt19937_64 rng(17);
  const auto same = random_configuration(16, rng);
  const auto trivial = coupled_pair(g, params, same, same, 1, 10);
  CHECK(trivial.tau_couple.detected());
  CHECK(trivial.tau_couple.value == 0);

  std::int64_t violations = 0;
  for (int k = 0; k < 100; ++k) {
    auto lo = random_configuration(16, rng);
    auto hi = lo;
    for (int x = 0; x < 256; ++x) {
      if (rng() % 3 == 0) hi.set(x, 1);
    }
    const auto run = coupled_pair(g, params, lo, hi, derive_seed(4, k), 1000);
    CHECK(run.ordered_start);
    violations += run.order_violations;
    const auto tau = coupling_time(g, params, lo, hi, derive_seed(4, k), 1000);
    CHECK(same_time(tau, run.tau_couple));
  }
  CHECK(violations == 0);

  // extreme pair sandwiches every other pair
  const TorusGeometry g8(8);
  const auto p8 = PcaParameters::explicit_values(0.7, 0.1);
  for (int k = 0; k < 200; ++k) {
    const auto a = random_configuration(8, rng);
    const auto b = random_configuration(8, rng);
    const auto seed = derive_seed(99, k);
    const auto extreme = coupling_time(g8, p8, SpinConfiguration::all_minus(8), SpinConfiguration::all_plus(8), seed, 5000);
    const auto pair = coupling_time(g8, p8, a, b, seed, 5000);
    REQUIRE(extreme.detected());
    REQUIRE(pair.detected());
    CHECK(pair.value <= extreme.value);
  }
}

TEST_CASE("coupling bound on the mixing distance") {
  const TorusGeometry g0(6);
  const auto free = PcaParameters::explicit_values(0, 0);
  const std::vector<std::int64_t> grid{0, 1, 2};
  const auto curve0 = mixing_bound_from_coupling(g0, free, 50, grid, 5);
  CHECK(curve0[0].bound == 1.0);
  CHECK(curve0[1].bound == 0.0);
  CHECK(curve0[2].bound == 0.0);
  for (int s = 0; s < 20; ++s) {
    const auto tau = coupling_time(g0, free, SpinConfiguration::all_minus(6), SpinConfiguration::all_plus(6), s, 10);
    CHECK(tau.value == 1);
  }

  const TorusGeometry g(3);
  const auto params = PcaParameters::explicit_values(1.2, 0.1);
  std::vector<std::int64_t> t_grid;
  for (std::int64_t t = 0; t <= 60; t += 4) t_grid.push_back(t);
  const auto curve = mixing_bound_from_coupling(g, params, 4000, t_grid, 11);
  const auto P = exact::pca_kernel(params, g);
  const auto pi = exact::stationary_pca(params, g);
  const auto d = exact::tv_curve(P, pi.weights, t_grid);
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    CHECK(curve[k].ci_low <= curve[k].bound);
    CHECK(curve[k].bound <= curve[k].ci_high);
    CHECK(d[k] <= curve[k].ci_high);
  }
  for (std::size_t k = 1; k < curve.size(); ++k) CHECK(curve[k].bound <= curve[k - 1].bound);
}

TEST_CASE("time summaries") {
  std::vector<StoppingTime> censored(10, StoppingTime{100, true});
  const auto empty = summarize_times("S", censored);
  CHECK(empty.censor_rate == 1.0);
  CHECK(empty.insufficient);
  CHECK(empty.n_uncensored == 0);
  CHECK(empty.ecdf.empty());

  // geometric samples with constant hazard
  const double h = 0.07;
  std::mt19937_64 rng(8);
  std::geometric_distribution<int> geo(h);
  std::vector<StoppingTime> times;
  for (int k = 0; k < 20000; ++k) times.push_back(StoppingTime::at(1 + geo(rng)));
  const auto s = summarize_times("S", times);
  CHECK_FALSE(s.insufficient);
  CHECK(s.censor_rate == 0.0);
  CHECK(std::fabs(s.mean - 1 / h) <= 4 * s.stderr_mean);
  CHECK(s.q25 <= s.median);
  CHECK(s.median <= s.q75);
  CHECK(s.ecdf.back().second == 1.0);

  std::vector<StoppingTime> few(29, StoppingTime::at(3));
  CHECK(summarize_times("R", few).insufficient);
}
