#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pcaising/coupling.hpp"
#include "pcaising/lattice.hpp"
#include "pcaising/parameters.hpp"
#include "pcaising/random_field.hpp"
#include "pcaising/spin.hpp"

namespace pcaising {

/// Metropolis single-site dynamics moved one accepted flip at a time. Sites
/// are grouped by sigma_x * (sum of the four neighbours); the number of
/// attempted updates before a flip is geometric with the total flip rate,
/// which reproduces the discrete-time law of glauber_step exactly.
class GlauberJumpChain {
 public:
  GlauberJumpChain(const TorusGeometry& g, const PcaParameters& params, const SpinConfiguration& start);

  void reset(const SpinConfiguration& start);
  const SpinConfiguration& state() const noexcept { return sigma_; }
  int plus_count() const noexcept { return plus_; }
  /// Probability that one attempted update flips a spin.
  double flip_rate() const noexcept;
  /// Moves to the next accepted flip; returns the attempted updates used.
  std::int64_t jump(Engine& engine);
  /// Flips `site` directly (bookkeeping only, no time).
  void flip(int site);

 private:
  int class_of(int site) const noexcept;
  void place(int site);
  void remove(int site);

  TorusGeometry geometry_;
  SpinConfiguration sigma_;
  std::array<double, 5> acceptance_{};
  std::array<std::vector<int>, 5> members_;
  std::vector<int> class_;
  std::vector<int> position_;
  int plus_ = 0;
};

/// First n >= 1 with the chain at all plus, counted in attempted updates.
StoppingTime glauber_hitting_time(const TorusGeometry& g, const PcaParameters& params,
                                  const SpinConfiguration& start, std::uint64_t seed,
                                  std::int64_t budget);

struct SplittingOptions {
  int particles = 100;
  std::int64_t max_iterations = 1'000'000;
};

struct SplittingEstimate {
  /// P(an excursion leaving -1 reaches +1 before coming back), and its log.
  double p = 0.0;
  double log_p = 0.0;
  std::int64_t iterations = 0;
  bool extinct = false;
};

/// Adaptive multilevel splitting on the plus count, killing all particles
/// tied at the lowest level in each round.
SplittingEstimate glauber_escape_probability(const TorusGeometry& g, const PcaParameters& params,
                                             std::uint64_t seed, const SplittingOptions& options = {});

struct TunnelingEstimate {
  double p_escape = 0.0;
  double log_p_escape = 0.0;
  /// Mean attempted updates spent at -1 before each departure, e^{8J}.
  double holding = 0.0;
  /// Mean attempted updates of an excursion from a single plus spin.
  double excursion = 0.0;
  int excursion_samples = 0;
  /// (holding + excursion) / p_escape, in attempted updates and in sweeps.
  double mean_steps = 0.0;
  double log_mean_steps = 0.0;
  double mean_sweeps = 0.0;
};

TunnelingEstimate glauber_tunneling_estimate(const TorusGeometry& g, const PcaParameters& params,
                                             std::uint64_t seed, const SplittingOptions& options = {},
                                             int excursion_samples = 20000);

struct ExactTunneling {
  double mean_steps = 0.0;  // E[T_1] from -1
  double p_escape = 0.0;    // from one plus spin, +1 before -1
  int orbits = 0;
};

/// Solves the chain lumped by the translations and square symmetries of the torus (L <= 4).
ExactTunneling glauber_exact_tunneling(const TorusGeometry& g, const PcaParameters& params);

}  // namespace pcaising
