#include "pcaising/coupling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "pcaising/stats.hpp"

namespace pcaising {

DiagonalTracker::DiagonalTracker(const TorusGeometry& g, const SpinConfiguration& start)
    : side_(g.side()), eta_plus_(static_cast<std::size_t>(g.side()), 0) {
  if (start.side() != side_) throw std::invalid_argument("configuration does not match the torus");
  for (int x = 0; x < g.site_count(); ++x) {
    if (start.is_plus(x)) {
      ++eta_plus_[static_cast<std::size_t>(g.diagonal_index(x))];
      ++plus_total_;
    }
  }
  for (int c : eta_plus_) nonconstant_ += (c != 0 && c != side_);
}

void DiagonalTracker::bump(int m, int delta) noexcept {
  int& c = eta_plus_[static_cast<std::size_t>(m)];
  const bool was_constant = c == 0 || c == side_;
  c += delta;
  const bool is_constant = c == 0 || c == side_;
  nonconstant_ += static_cast<int>(was_constant) - static_cast<int>(is_constant);
  plus_total_ += delta;
}

void DiagonalTracker::advance(const SpinConfiguration& previous, const SpinConfiguration& next) {
  horizontal_shift_into(previous, 1, shifted_);
  ++time_;
  last_mismatch_ = 0;
  const int words = next.words_per_row();
  const int offset = static_cast<int>(time_ % side_);
  for (int j = 0; j < side_; ++j) {
    const std::uint64_t* a = next.row(j);
    const std::uint64_t* b = shifted_.row(j);
    for (int w = 0; w < words; ++w) {
      std::uint64_t diff = a[w] ^ b[w];
      while (diff != 0) {
        const int bit = std::countr_zero(diff);
        diff &= diff - 1;
        const int i = 64 * w + bit;
        const int eta_diagonal = wrap(i + j - offset, side_);
        bump(eta_diagonal, ((a[w] >> bit) & 1U) ? 1 : -1);
        ++last_mismatch_;
      }
    }
  }
}

TrajectoryDetector::TrajectoryDetector(const TorusGeometry& g, const SpinConfiguration& start,
                                       TrajectoryRecord& record, int max_rungs)
    : tracker_(g, start), record_(&record), in_diagonal_(tracker_.is_diagonal()), max_rungs_(max_rungs) {
  record.diagonal_start = in_diagonal_;
  if (!in_diagonal_) record.ladder.push_back({0, {}});
}

void TrajectoryDetector::observe(std::int64_t n, const SpinConfiguration& before,
                                 const SpinConfiguration& after, const StepSummary& summary) {
  TrajectoryRecord& r = *record_;
  r.steps_run = n;
  tracker_.advance(before, after);
  if (summary.atypical_count > 0) {
    r.atypical_events += summary.atypical_count;
    if (r.S.censored) {
      r.S = StoppingTime::at(n);
      r.first_atypical_site = summary.atypical_count == 1 ? summary.first_atypical_site : -1;
    }
    if (summary.atypical_count >= 2 && r.T.censored) r.T = StoppingTime::at(n);
  }
  if (summary.window_exits > 0 && r.S_window.censored) r.S_window = StoppingTime::at(n);
  if (summary.window_exits >= 2 && r.T_window.censored) r.T_window = StoppingTime::at(n);
  if (tracker_.last_shift_mismatch() > 0 && r.S_shift.censored) r.S_shift = StoppingTime::at(n);

  const bool diagonal = tracker_.is_diagonal();
  if (diagonal && r.R.censored) r.R = StoppingTime::at(n);
  if (tracker_.is_all_plus() && r.T_one.censored) r.T_one = StoppingTime::at(n);

  if (diagonal != in_diagonal_) {
    if (!diagonal) {
      if (static_cast<int>(r.ladder.size()) < max_rungs_ && !r.ladder_truncated) {
        r.ladder.push_back({n, {}});
      } else {
        r.ladder_truncated = true;
      }
    } else {
      ++returns_;
      if (!r.ladder_truncated && !r.ladder.empty()) r.ladder.back().return_to = StoppingTime::at(n);
    }
    in_diagonal_ = diagonal;
  }
}

bool TrajectoryDetector::satisfied(const TrialOptions& o) const noexcept {
  const TrajectoryRecord& r = *record_;
  const bool any = o.stop_at_S || o.stop_at_T_one || o.stop_at_R || o.stop_after_rungs > 0;
  if (!any) return false;
  if (o.stop_at_S && r.S.censored) return false;
  if (o.stop_at_T_one && r.T_one.censored) return false;
  if (o.stop_at_R && r.R.censored) return false;
  if (o.stop_after_rungs > 0 && returns_ < o.stop_after_rungs) return false;
  return true;
}

namespace {

RandomField make_field(const PcaParameters& params, std::uint64_t seed, bool windowed) {
  if (!windowed) return RandomField(seed);
  return RandomField::conditioned(seed, params.atypical_width());
}

void check_start(const TorusGeometry& g, const SpinConfiguration& s) {
  if (s.side() != g.side()) throw std::invalid_argument("start configuration does not match the torus");
}

}  // namespace

TrajectoryRecord run_trial(const TorusGeometry& g, const PcaParameters& params,
                           const SpinConfiguration& start, std::uint64_t seed,
                           const TrialOptions& options, TrialObserver* observer) {
  check_start(g, start);
  if (options.budget < 0) throw std::invalid_argument("budget must be non-negative");
  TrajectoryRecord record;
  record.seed = seed;
  record.params = params;
  record.side = g.side();
  record.budget = options.budget;
  record.windowed = options.windowed;
  TrajectoryDetector detector(g, start, record, options.max_rungs);
  const PcaStepper stepper(g, params);
  const RandomField field = make_field(params, seed, options.windowed);
  SpinConfiguration current = start;
  SpinConfiguration next = start;
  for (std::int64_t n = 1; n <= options.budget; ++n) {
    StepSummary summary;
    stepper.advance(current, field, n, next, summary);
    if (observer) observer->on_step(n, current, next, summary);
    detector.observe(n, current, next, summary);
    std::swap(current, next);
    if (detector.satisfied(options)) break;
  }
  return record;
}

CoupledRun coupled_pair(const TorusGeometry& g, const PcaParameters& params,
                        const SpinConfiguration& first, const SpinConfiguration& second,
                        std::uint64_t seed, std::int64_t budget) {
  check_start(g, first);
  check_start(g, second);
  CoupledRun run;
  for (TrajectoryRecord* r : {&run.first, &run.second}) {
    r->seed = seed;
    r->params = params;
    r->side = g.side();
    r->budget = budget;
  }
  run.ordered_start = leq(first, second);
  if (first == second) {
    run.tau_couple = StoppingTime::at(0);
    return run;
  }
  TrajectoryDetector da(g, first, run.first);
  TrajectoryDetector db(g, second, run.second);
  const PcaStepper stepper(g, params);
  const RandomField field(seed);
  SpinConfiguration a = first, b = second, na = first, nb = second;
  for (std::int64_t n = 1; n <= budget; ++n) {
    StepSummary sa, sb;
    stepper.advance(a, field, n, na, sa);
    stepper.advance(b, field, n, nb, sb);
    da.observe(n, a, na, sa);
    db.observe(n, b, nb, sb);
    if (run.ordered_start && !leq(na, nb)) ++run.order_violations;
    std::swap(a, na);
    std::swap(b, nb);
    if (a == b) {
      run.tau_couple = StoppingTime::at(n);
      break;
    }
  }
  return run;
}

StoppingTime coupling_time(const TorusGeometry& g, const PcaParameters& params,
                           const SpinConfiguration& first, const SpinConfiguration& second,
                           std::uint64_t seed, std::int64_t budget) {
  check_start(g, first);
  check_start(g, second);
  if (first == second) return StoppingTime::at(0);
  const PcaStepper stepper(g, params);
  const RandomField field(seed);
  SpinConfiguration a = first, b = second, na = first, nb = second;
  StepSummary summary;
  for (std::int64_t n = 1; n <= budget; ++n) {
    stepper.advance(a, field, n, na, summary);
    stepper.advance(b, field, n, nb, summary);
    std::swap(a, na);
    std::swap(b, nb);
    if (a == b) return StoppingTime::at(n);
  }
  return {budget, true};
}

std::vector<BoundPoint> mixing_bound_from_coupling(const TorusGeometry& g, const PcaParameters& params,
                                                   int n_seeds, std::span<const std::int64_t> t_grid,
                                                   std::uint64_t master_seed, double z) {
  if (n_seeds <= 0) throw std::invalid_argument("need at least one seed");
  if (t_grid.empty()) return {};
  const std::int64_t budget = *std::max_element(t_grid.begin(), t_grid.end()) + 1;
  const auto lo = SpinConfiguration::all_minus(g.side());
  const auto hi = SpinConfiguration::all_plus(g.side());
  std::vector<StoppingTime> taus;
  taus.reserve(static_cast<std::size_t>(n_seeds));
  for (int s = 0; s < n_seeds; ++s) {
    taus.push_back(coupling_time(g, params, lo, hi, derive_seed(master_seed, static_cast<std::uint64_t>(s)), budget));
  }
  return bound_from_times(taus, t_grid, z);
}

std::vector<BoundPoint> bound_from_times(std::span<const StoppingTime> taus, std::span<const std::int64_t> t_grid,
                                         double z) {
  if (taus.empty()) throw std::invalid_argument("need at least one coupling time");
  const int n = static_cast<int>(taus.size());
  std::vector<BoundPoint> out;
  for (std::int64_t t : t_grid) {
    BoundPoint p;
    p.t = t;
    p.trials = n;
    for (const auto& tau : taus) p.exceed += (tau.censored || tau.value > t);
    p.bound = static_cast<double>(p.exceed) / n;
    const auto ci = stats::wilson_interval(p.exceed, n, z);
    p.ci_low = ci.low;
    p.ci_high = ci.high;
    out.push_back(p);
  }
  return out;
}

double atypical_hazard(const TorusGeometry& g, const PcaParameters& params,
                       const SpinConfiguration& sigma) {
  double log_survive = 0.0;
  for (int x = 0; x < g.site_count(); ++x) {
    const int d = sigma.spin(g.neighbor(x, Direction::down));
    const int l = sigma.spin(g.neighbor(x, Direction::left));
    if (d != l) continue;
    const double p_plus = local_prob(params, d, l, sigma.spin(x));
    const double a = d > 0 ? 1.0 - p_plus : p_plus;
    log_survive += std::log1p(-a);
  }
  return -std::expm1(log_survive);
}

TimeSummary summarize_times(const std::string& name, std::span<const StoppingTime> times) {
  TimeSummary s;
  s.name = name;
  s.n_total = static_cast<int>(times.size());
  std::vector<double> values;
  for (const auto& t : times) {
    if (!t.censored) values.push_back(static_cast<double>(t.value));
  }
  s.n_uncensored = static_cast<int>(values.size());
  s.censor_rate = s.n_total == 0 ? 1.0 : 1.0 - static_cast<double>(s.n_uncensored) / s.n_total;
  std::sort(values.begin(), values.end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 == values.size() || values[i + 1] != values[i]) {
      s.ecdf.emplace_back(values[i], static_cast<double>(i + 1) / static_cast<double>(values.size()));
    }
  }
  s.insufficient = s.n_uncensored < 30;
  if (s.insufficient) return s;
  const auto summary = stats::summarize(values);
  s.mean = summary.mean;
  s.stderr_mean = summary.stderr_mean;
  s.q25 = stats::quantile_sorted(values, 0.25);
  s.median = summary.median;
  s.q75 = stats::quantile_sorted(values, 0.75);
  return s;
}

TimeStatistics time_statistics(std::span<const TrajectoryRecord> records) {
  TimeStatistics st;
  st.records = static_cast<int>(records.size());
  std::vector<StoppingTime> s, t, r, one, first_return;
  for (const auto& rec : records) {
    s.push_back(rec.S);
    t.push_back(rec.T);
    r.push_back(rec.R);
    one.push_back(rec.T_one);
    first_return.push_back(rec.ladder.empty() ? StoppingTime{rec.steps_run, true} : rec.ladder.front().return_to);
    if (!rec.S.censored) {
      ++st.s_seen;
      st.t_equals_s += !rec.T.censored && rec.S.value == rec.T.value;
    }
    if (rec.diagonal_start &&
        (rec.S.censored != rec.S_shift.censored || (!rec.S.censored && rec.S.value != rec.S_shift.value))) {
      ++st.shift_disagreements;
    }
    if (!rec.S_window.censored && (rec.S.censored || rec.S_window.value < rec.S.value)) {
      ++st.window_disagreements;
    }
  }
  st.S = summarize_times("S", s);
  st.T = summarize_times("T", t);
  st.R = summarize_times("R", r);
  st.T_one = summarize_times("T_one", one);
  st.R_first = summarize_times("R_first", first_return);
  if (st.s_seen > 0) {
    const double p = static_cast<double>(st.t_equals_s) / st.s_seen;
    st.p_t_equals_s = p;
    st.p_t_equals_s_stderr = std::sqrt(p * (1 - p) / st.s_seen);
  }
  return st;
}

}  // namespace pcaising
