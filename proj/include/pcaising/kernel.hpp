#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pcaising/lattice.hpp"
#include "pcaising/parameters.hpp"
#include "pcaising/random_field.hpp"
#include "pcaising/spin.hpp"

namespace pcaising {

/// Probability that the updated spin at x is +1 given sigma_x^d, sigma_x^l, sigma_x.
/// Equals e^{h} / (2 cosh h) with h = J (sigma^d + sigma^l) + q sigma_x.
double local_prob(const PcaParameters& params, int down, int left, int self);

/// H(sigma, tau) = -sum_x [J sigma_x (tau_x^u + tau_x^r) + q sigma_x tau_x].
double pair_hamiltonian(const TorusGeometry& g, const PcaParameters& params,
                        const SpinConfiguration& sigma, const SpinConfiguration& tau);
/// The same sum regrouped as -sum_x [J tau_x (sigma_x^d + sigma_x^l) + q sigma_x tau_x].
double pair_hamiltonian_by_target(const TorusGeometry& g, const PcaParameters& params,
                                  const SpinConfiguration& sigma, const SpinConfiguration& tau);

/// Ising energy H(sigma) = -J sum over the 2 L^2 bonds of sigma_x sigma_y.
double ising_energy(const TorusGeometry& g, const PcaParameters& params,
                    const SpinConfiguration& sigma);

/// log Z_sigma from the contour closed form.
double log_z_sigma(const TorusGeometry& g, const PcaParameters& params,
                   const SpinConfiguration& sigma);
/// log Z_sigma as q L^2 - H(sigma) + sum_x log(1 + delta phi_x).
double log_z_sigma_reweighted(const TorusGeometry& g, const PcaParameters& params,
                              const SpinConfiguration& sigma);

/// Exponents of cosh(2J - q), cosh(q), cosh(2J + q) in sum_tau e^{-H(sigma, tau)}
/// (forward, built from n_dl) and in sum_tau e^{-H(tau, sigma)} (backward, from n_ur).
struct ExponentTriples {
  std::array<int, 3> forward;
  std::array<int, 3> backward;
  bool equal() const noexcept { return forward == backward; }
};
ExponentTriples weak_symmetry_exponents(const TorusGeometry& g, const SpinConfiguration& sigma);

/// log P(sigma, tau) = -H(sigma, tau) - log Z_sigma.
double transition_log_prob(const TorusGeometry& g, const PcaParameters& params,
                           const SpinConfiguration& sigma, const SpinConfiguration& tau);

enum class UpdateClass : std::uint8_t { typical, atypical, neutral };

const char* to_string(UpdateClass c) noexcept;

struct UpdateEvent {
  int site = 0;
  std::int64_t step = 0;
  UpdateClass update_class = UpdateClass::typical;
};

/// Typical: aligned down/left neighbours and the outcome follows them.
/// Atypical: aligned and the outcome opposes them. Neutral: split neighbours.
UpdateClass classify_event(const TorusGeometry& g, const SpinConfiguration& before, int site,
                           int outcome);

struct StepSummary {
  int atypical_count = 0;
  int first_atypical_site = -1;
  int neutral_count = 0;
  /// Sites whose uniform fell outside (w, 1 - w), w = params.atypical_width().
  int window_exits = 0;
};

/// Parallel update rule realised through uniforms: sigma_x(n) = +1 iff
/// U_x(n) <= local_prob(sigma^d, sigma^l, sigma_x), which is conditions (A), (B), (C).
class PcaStepper {
 public:
  PcaStepper(const TorusGeometry& geometry, const PcaParameters& params);

  const TorusGeometry& geometry() const noexcept { return geometry_; }
  const PcaParameters& params() const noexcept { return params_; }

  /// Threshold indexed by (down > 0) << 2 | (left > 0) << 1 | (self > 0).
  double threshold(int code) const noexcept { return thresholds_[static_cast<std::size_t>(code)]; }

  /// Writes sigma(step) into `next` given `current` = sigma(step - 1).
  /// When the field window lies inside (w, 1 - w) only neutral sites read
  /// their uniform; every other outcome is already forced.
  void advance(const SpinConfiguration& current, const RandomField& field, std::int64_t step,
               SpinConfiguration& next, StepSummary& summary) const;

  /// Same update, also listing one event per site.
  void advance(const SpinConfiguration& current, const RandomField& field, std::int64_t step,
               SpinConfiguration& next, std::vector<UpdateEvent>& events) const;

 private:
  bool forces_typical(const RandomField& field) const noexcept;

  TorusGeometry geometry_;
  PcaParameters params_;
  std::array<double, 8> thresholds_{};
  double window_width_ = 0.0;
};

struct StepResult {
  SpinConfiguration next;
  std::vector<UpdateEvent> events;
};

StepResult pca_step(const TorusGeometry& g, const PcaParameters& params,
                    const SpinConfiguration& sigma, const RandomField& field, std::int64_t step);

/// Metropolis acceptance exp(-(H(sigma^x) - H(sigma))^+) for flipping x.
double glauber_acceptance(const TorusGeometry& g, const PcaParameters& params,
                          const SpinConfiguration& sigma, int site);

/// One Metropolis update at a uniformly chosen site.
SpinConfiguration glauber_step(const TorusGeometry& g, const PcaParameters& params,
                               const SpinConfiguration& sigma, Engine& engine);

}  // namespace pcaising
