#pragma once

#include <optional>

namespace pcaising {

/// Regime constants: J = k log L, q = c log L / L.
struct Regime {
  double k = 0.0;
  double c = 0.0;
  friend bool operator==(const Regime&, const Regime&) = default;
};

/// Coupling J and self-interaction q of the PCA, optionally tied to a regime.
class PcaParameters {
 public:
  PcaParameters() = default;

  static PcaParameters explicit_values(double J, double q);
  static PcaParameters from_regime(Regime regime, int side);

  double J() const noexcept { return J_; }
  double q() const noexcept { return q_; }
  const std::optional<Regime>& regime() const noexcept { return regime_; }

  /// delta = e^{-2q}.
  double delta() const noexcept;
  /// Half-width of the zero-temperature window, e^{-2J+q} / (2 cosh(2J - q)).
  double atypical_width() const noexcept;
  /// True when the zero-temperature window (w, 1 - w) is non-empty.
  bool has_window() const noexcept { return 2.0 * J_ > q_; }

  friend bool operator==(const PcaParameters&, const PcaParameters&) = default;

 private:
  PcaParameters(double J, double q, std::optional<Regime> regime)
      : J_(J), q_(q), regime_(regime) {}

  double J_ = 0.0;
  double q_ = 0.0;
  std::optional<Regime> regime_;
};

}  // namespace pcaising
