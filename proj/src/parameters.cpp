#include "pcaising/parameters.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pcaising/numerics.hpp"

namespace pcaising {

namespace {
void check_nonnegative(double value, const char* name) {
  if (!std::isfinite(value) || value < 0.0) {
    throw std::invalid_argument(std::string(name) + " must be finite and >= 0");
  }
}
}  // namespace

PcaParameters PcaParameters::explicit_values(double J, double q) {
  check_nonnegative(J, "J");
  check_nonnegative(q, "q");
  return PcaParameters(J, q, std::nullopt);
}

PcaParameters PcaParameters::from_regime(Regime regime, int side) {
  check_nonnegative(regime.k, "k");
  check_nonnegative(regime.c, "c");
  if (side < 2) throw std::invalid_argument("regime needs L >= 2");
  const double log_l = std::log(static_cast<double>(side));
  return PcaParameters(regime.k * log_l, regime.c * log_l / side, regime);
}

double PcaParameters::delta() const noexcept { return std::exp(-2.0 * q_); }

double PcaParameters::atypical_width() const noexcept {
  // e^{-a} / (2 cosh a) = 1 / (1 + e^{2a}) with a = 2J - q
  return numerics::sigmoid(-2.0 * (2.0 * J_ - q_));
}

}  // namespace pcaising
