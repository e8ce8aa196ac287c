#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pcaising/coupling.hpp"
#include "pcaising/lattice.hpp"
#include "pcaising/parameters.hpp"
#include "pcaising/random_field.hpp"
#include "pcaising/spin.hpp"

namespace pcaising {

/// Per-step law of the minority count N of a discrepancy arc:
/// N -> N + 1 with p_plus = s^2, N -> N - 1 with p_minus = (1 - s)^2, where s is
/// the probability that a neutral end site takes the discrepancy sign.
struct WalkParameters {
  double s = 0.5;
  double p_plus = 0.25;
  double p_minus = 0.25;
};

WalkParameters walk_from_agreement(double s);

/// Neutral site taking the discrepancy sign. Favorable means the neighbouring
/// diagonal already has that sign. With a non-empty zero-temperature window
/// the uniform is restricted to (w, 1 - w), otherwise it is unrestricted.
double neutral_agreement_prob(const PcaParameters& params, bool favorable);
WalkParameters walk_params(const PcaParameters& params, bool favorable);
/// s = e^{+-q} / (2 cosh q), no window.
WalkParameters walk_params_unconditioned(double q, bool favorable);

/// P(H_L < H_0) for the lazy walk from `start`.
double hit_prob(double p_plus, double p_minus, int L, int start = 1);
/// E[min(H_0, H_L)] from `start`.
double expected_absorption(double p_plus, double p_minus, int L, int start = 1);

/// Diagonal m of the eta-frame is favorable when xi_m != xi_{m+1}.
bool is_favorable(const std::vector<int>& xi, int m);

/// Law of the site X of the single atypical update from a diagonal sigma,
/// P(X = x) proportional to |I_x| / (1 - |I_x|). Rejects non-diagonal sigma.
std::vector<double> discrepancy_site_law(const TorusGeometry& g, const PcaParameters& params,
                                         const SpinConfiguration& sigma);
int sample_discrepancy_site(const TorusGeometry& g, const PcaParameters& params,
                            const SpinConfiguration& sigma, Engine& engine);

struct DiscrepancyState {
  int side = 0;
  int diagonal = 0;
  int arc_start = 0;  // column of the first minority site
  int N = 1;
  bool favorable = false;
};

struct WalkOutcome {
  int absorbed_at = 0;  // 0 or L; -1 when the budget ran out
  std::int64_t duration = 0;
};

WalkOutcome run_discrepancy_walk(const WalkParameters& walk, int L, int start, std::uint64_t seed,
                                 std::int64_t budget = std::int64_t{1} << 40);
WalkOutcome run_discrepancy_walk(const PcaParameters& params, const DiscrepancyState& state,
                                 std::uint64_t seed, std::int64_t budget = std::int64_t{1} << 40);

/// One renormalized step from xi: probability of flipping each diagonal, and of staying.
struct EffectiveLaw {
  std::vector<double> flip;
  double stay = 1.0;
};

EffectiveLaw effective_step_law(const PcaParameters& params, const std::vector<int>& xi);
/// Index of the flipped diagonal, or -1 when xi is unchanged.
int effective_step(const PcaParameters& params, std::vector<int>& xi, Engine& engine);

struct EffectiveEvent {
  std::int64_t step = 0;
  int diagonal = 0;
  int direction = 0;  // new spin of the diagonal
};

struct EffectiveRunOptions {
  std::int64_t budget = std::int64_t{1} << 50;
  /// Drop flips of unfavorable diagonals.
  bool favorable_only = false;
  bool record_events = false;
};

struct EffectiveRun {
  StoppingTime time;     // renormalized steps until the target
  bool reached_plus = false;
  std::int64_t flips = 0;
  std::vector<int> final_xi;
  std::vector<EffectiveEvent> events;
};

/// Runs the renormalized chain from -1 until +1.
EffectiveRun effective_tunneling_time(const PcaParameters& params, int L, std::uint64_t seed,
                                      const EffectiveRunOptions& options = {});
/// Runs from xi until it is all plus or all minus.
EffectiveRun effective_excursion(const PcaParameters& params, std::vector<int> xi, std::uint64_t seed,
                                 const EffectiveRunOptions& options = {});

/// Minority set of one diagonal, relative to `reference`, as a cyclic arc of columns.
struct DefectArc {
  int start = 0;
  int length = 0;
};

/// The sites of diagonal m with spin != reference, if they form one cyclic arc
/// (in column order). Empty set gives length 0.
std::optional<DefectArc> defect_arc(const TorusGeometry& g, const SpinConfiguration& sigma, int m,
                                    int reference);

struct ExcursionResult {
  bool flipped = false;
  int eta_diagonal = 0;
  StoppingTime R;
  bool arc_contiguous = true;
  int max_arc_change = 0;
};

/// Zero-temperature run from the diagonal configuration xi with the spin at
/// `site` flipped, until sigma returns to the diagonal set.
ExcursionResult zero_temperature_excursion(const TorusGeometry& g, const PcaParameters& params,
                                           const std::vector<int>& xi, int site, std::uint64_t seed,
                                           std::int64_t budget = 1'000'000);

enum class DirectMode {
  /// First atypical step redrawn until it has exactly one atypical update,
  /// then the zero-temperature window until the return.
  conditioned,
  /// Plain dynamics throughout.
  unconditioned,
};

struct DirectStep {
  /// Flipped eta-diagonal, -1 when xi is unchanged, -2 for anything else.
  int outcome = -1;
  StoppingTime S;
  StoppingTime R;
  std::int64_t redraws = 0;
  std::vector<int> xi_after;
};

/// One renormalized step of the lattice dynamics from the diagonal configuration xi.
DirectStep direct_renormalized_step(const TorusGeometry& g, const PcaParameters& params,
                                    const std::vector<int>& xi, std::uint64_t seed, DirectMode mode,
                                    std::int64_t budget = 10'000'000);

}  // namespace pcaising
