#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "pcaising/lattice.hpp"
#include "pcaising/parameters.hpp"
#include "pcaising/spin.hpp"

namespace pcaising::exact {

/// Measure-level work (closed-form weights) is allowed up to L = 4,
/// kernel-level work (2^{L^2} x 2^{L^2} matrices) only up to L = 3.
enum class Capability { measure, kernel };

int max_side(Capability capability) noexcept;
/// Throws SizeGuardError when L exceeds the capability limit.
void require_size(int side, Capability capability);

/// All 2^{L^2} configurations in canonical encoding order.
std::vector<SpinConfiguration> enumerate(const TorusGeometry& g,
                                         Capability capability = Capability::measure);

/// Probabilities indexed by canonical code.
struct ExactDistribution {
  int side = 0;
  std::vector<double> weights;

  double operator[](std::uint64_t code) const { return weights[static_cast<std::size_t>(code)]; }
  double total() const;
};

ExactDistribution stationary_pca(const PcaParameters& params, const TorusGeometry& g);
/// Gibbs measure in contour form, e^{-2J l(sigma)} / Z.
ExactDistribution gibbs(const PcaParameters& params, const TorusGeometry& g);
/// Gibbs measure in energy form, e^{-H(sigma)} / Z.
ExactDistribution gibbs_energy_form(const PcaParameters& params, const TorusGeometry& g);

/// Half the L1 distance.
double tv_distance(std::span<const double> mu, std::span<const double> nu);
double tv_distance(const ExactDistribution& mu, const ExactDistribution& nu);

/// pi_G[|f / pi_G(f) - 1|], the L1 distance between the two measures.
double reweighting_l1(const PcaParameters& params, const TorusGeometry& g);
/// Total variation (half L1) obtained through the reweighting function f.
double tv_via_f(const PcaParameters& params, const TorusGeometry& g);

Eigen::MatrixXd pca_kernel(const PcaParameters& params, const TorusGeometry& g);
/// Single-site Metropolis kernel: at most L^2 + 1 non-zeros per row.
Eigen::SparseMatrix<double, Eigen::RowMajor> glauber_kernel(const PcaParameters& params,
                                                            const TorusGeometry& g);

double max_row_sum_deviation(const Eigen::MatrixXd& kernel);
/// max_tau |sum_sigma pi(sigma) P(sigma, tau) - pi(tau)|.
double stationarity_residual(const Eigen::MatrixXd& kernel, std::span<const double> pi);

/// sup_sigma TV(row sigma of `power`, pi).
double worst_case_tv(const Eigen::MatrixXd& power, std::span<const double> pi);
/// d(t) at each grid point (grid sorted ascending, t >= 0).
std::vector<double> tv_curve(const Eigen::MatrixXd& kernel, std::span<const double> pi,
                             std::span<const std::int64_t> t_grid);

struct MixingTime {
  std::int64_t steps = 0;
  bool censored = false;
};

/// Smallest t > 0 with d(t) <= threshold, found by repeated squaring.
MixingTime exact_mixing_time(const Eigen::MatrixXd& kernel, std::span<const double> pi,
                             double threshold, std::int64_t cap);
MixingTime exact_mixing_time(const Eigen::MatrixXd& kernel, std::span<const double> pi);

struct Theorem1Report {
  int side = 0;
  double k = 0.0;
  double c = 0.0;
  double J = 0.0;
  double q = 0.0;
  double tv_exact = 0.0;
  double bound_shape = 0.0;
};

/// Exact TV in the regime (k, c) next to the constant-free shape L^{1-c/2} + L^{2-2k}.
Theorem1Report theorem1_report(Regime regime, int side);

}  // namespace pcaising::exact
