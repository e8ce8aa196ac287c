#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcaising/kernel.hpp"
#include "pcaising/lattice.hpp"
#include "pcaising/parameters.hpp"
#include "pcaising/spin.hpp"

namespace pcaising {

/// A detected time, or an explicit censoring flag when it was not seen
/// within the steps that were run. `value` is meaningless when censored.
struct StoppingTime {
  std::int64_t value = 0;
  bool censored = true;

  static StoppingTime at(std::int64_t n) { return {n, false}; }
  bool detected() const noexcept { return !censored; }
};

/// Tracks membership in the diagonal set and equality with the all-plus
/// configuration along a trajectory, updating per-diagonal plus counts from
/// the sites where sigma(n) differs from the shift of sigma(n - 1).
/// Counts are kept in the eta-frame eta(n) = shift(sigma(n), -n).
class DiagonalTracker {
 public:
  DiagonalTracker(const TorusGeometry& g, const SpinConfiguration& start);

  /// Move from sigma(n - 1) = previous to sigma(n) = next.
  void advance(const SpinConfiguration& previous, const SpinConfiguration& next);

  std::int64_t time() const noexcept { return time_; }
  bool is_diagonal() const noexcept { return nonconstant_ == 0; }
  bool is_all_plus() const noexcept { return plus_total_ == side_ * side_; }
  int plus_total() const noexcept { return plus_total_; }
  /// Diagonals of eta(time) that are not constant.
  int nonconstant_count() const noexcept { return nonconstant_; }
  /// Plus spins on diagonal m of eta(time).
  int eta_plus(int m) const noexcept { return eta_plus_[static_cast<std::size_t>(m)]; }
  /// Sites where the last step departed from the pure shift.
  int last_shift_mismatch() const noexcept { return last_mismatch_; }

 private:
  void bump(int eta_diagonal, int delta) noexcept;

  int side_;
  std::int64_t time_ = 0;
  std::vector<int> eta_plus_;
  int nonconstant_ = 0;
  int plus_total_ = 0;
  int last_mismatch_ = 0;
  SpinConfiguration shifted_;
};

struct LadderRung {
  std::int64_t exit = 0;    // S_n
  StoppingTime return_to;   // R_n
};

/// One seeded realisation with every detected time.
struct TrajectoryRecord {
  std::uint64_t seed = 0;
  PcaParameters params;
  int side = 0;
  std::int64_t budget = 0;
  std::int64_t steps_run = 0;
  bool windowed = false;
  bool diagonal_start = false;

  StoppingTime S;        // first step with an atypical update
  StoppingTime T;        // first step with at least two atypical updates
  StoppingTime R;        // first n > 0 with sigma(n) diagonal
  StoppingTime T_one;    // first n >= 1 with sigma(n) all plus
  StoppingTime S_shift;  // first n with sigma(n) != shift(sigma(n - 1)), diagonal starts
  StoppingTime S_window; // first n with some uniform outside (w, 1 - w)
  StoppingTime T_window; // first n with two uniforms outside (w, 1 - w)

  std::vector<LadderRung> ladder;
  bool ladder_truncated = false;
  std::int64_t atypical_events = 0;
  /// The discrepancy site at time S when exactly one atypical update happened.
  int first_atypical_site = -1;
};

/// Called after every step of a trial.
class TrialObserver {
 public:
  virtual ~TrialObserver() = default;
  virtual void on_step(std::int64_t n, const SpinConfiguration& before,
                       const SpinConfiguration& after, const StepSummary& summary) = 0;
};

struct TrialOptions {
  std::int64_t budget = 1000;
  /// Use the zero-temperature window (w, 1 - w) for every uniform.
  bool windowed = false;
  bool stop_at_S = false;
  bool stop_at_T_one = false;
  bool stop_at_R = false;
  /// Stop once this many ladder returns R_n have been seen (0 = no rule).
  int stop_after_rungs = 0;
  /// Ladder rungs kept in the record.
  int max_rungs = 4096;
};

/// Feeds steps into a record; shared by single trials and coupled pairs.
class TrajectoryDetector {
 public:
  TrajectoryDetector(const TorusGeometry& g, const SpinConfiguration& start, TrajectoryRecord& record,
                     int max_rungs = 4096);
  void observe(std::int64_t n, const SpinConfiguration& before, const SpinConfiguration& after,
               const StepSummary& summary);
  bool satisfied(const TrialOptions& options) const noexcept;
  const DiagonalTracker& tracker() const noexcept { return tracker_; }

 private:
  DiagonalTracker tracker_;
  TrajectoryRecord* record_;
  bool in_diagonal_;
  int returns_ = 0;
  int max_rungs_;
};

TrajectoryRecord run_trial(const TorusGeometry& g, const PcaParameters& params,
                           const SpinConfiguration& start, std::uint64_t seed,
                           const TrialOptions& options, TrialObserver* observer = nullptr);

struct CoupledRun {
  TrajectoryRecord first;
  TrajectoryRecord second;
  StoppingTime tau_couple;
  bool ordered_start = false;
  /// Steps at which an ordered start lost its order (always 0 for this dynamics).
  std::int64_t order_violations = 0;
};

/// Both chains read the same U_x(n). Runs until they agree or the budget ends.
CoupledRun coupled_pair(const TorusGeometry& g, const PcaParameters& params,
                        const SpinConfiguration& first, const SpinConfiguration& second,
                        std::uint64_t seed, std::int64_t budget);

/// tau_couple only, for large ensembles.
StoppingTime coupling_time(const TorusGeometry& g, const PcaParameters& params,
                           const SpinConfiguration& first, const SpinConfiguration& second,
                           std::uint64_t seed, std::int64_t budget);

struct BoundPoint {
  std::int64_t t = 0;
  int exceed = 0;  // seeds with tau_couple > t
  int trials = 0;
  double bound = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Empirical P(tau_couple(-1, +1) > t) on the grid with Wilson intervals at z.
std::vector<BoundPoint> mixing_bound_from_coupling(const TorusGeometry& g, const PcaParameters& params,
                                                   int n_seeds, std::span<const std::int64_t> t_grid,
                                                   std::uint64_t master_seed, double z = 4.0);
/// Same tail estimate from coupling times already drawn.
std::vector<BoundPoint> bound_from_times(std::span<const StoppingTime> taus, std::span<const std::int64_t> t_grid,
                                         double z = 4.0);

/// Probability that the next step contains an atypical update, 1 - prod_x (1 - |I_x|).
double atypical_hazard(const TorusGeometry& g, const PcaParameters& params,
                       const SpinConfiguration& sigma);

struct TimeSummary {
  std::string name;
  int n_total = 0;
  int n_uncensored = 0;
  double censor_rate = 1.0;
  /// Fewer than 30 uncensored samples: no moments are reported.
  bool insufficient = true;
  double mean = 0.0;
  double stderr_mean = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  std::vector<std::pair<double, double>> ecdf;  // (value, F(value)) over uncensored samples
};

TimeSummary summarize_times(const std::string& name, std::span<const StoppingTime> times);

struct TimeStatistics {
  int records = 0;
  TimeSummary S;
  TimeSummary T;
  TimeSummary R;
  TimeSummary T_one;
  /// First return to the diagonal set after the first exit (ladder rung 0).
  TimeSummary R_first;
  /// Records with S seen; T = S is decided at step S, so a censored T counts as T > S.
  int s_seen = 0;
  int t_equals_s = 0;
  double p_t_equals_s = 0.0;
  double p_t_equals_s_stderr = 0.0;
  /// Records where the event detector and the shift detector disagree (diagonal starts).
  int shift_disagreements = 0;
  /// Records where the window detector fires before the event detector.
  int window_disagreements = 0;
};

TimeStatistics time_statistics(std::span<const TrajectoryRecord> records);

}  // namespace pcaising
