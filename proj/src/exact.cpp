#include "pcaising/exact.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pcaising/errors.hpp"
#include "pcaising/kernel.hpp"
#include "pcaising/numerics.hpp"

namespace pcaising::exact {

namespace {

std::size_t state_count(const TorusGeometry& g) {
  return std::size_t{1} << g.site_count();
}

ExactDistribution normalise_log_weights(int side, std::vector<double> log_w) {
  const double log_z = numerics::log_sum_exp(log_w);
  for (double& w : log_w) w = std::exp(w - log_z);
  return {side, std::move(log_w)};
}

template <class LogWeight>
ExactDistribution measure_from(const TorusGeometry& g, LogWeight&& log_weight) {
  require_size(g.side(), Capability::measure);
  const std::size_t n = state_count(g);
  std::vector<double> log_w(n);
  for (std::size_t code = 0; code < n; ++code) {
    log_w[code] = log_weight(SpinConfiguration::decode(g.side(), code));
  }
  return normalise_log_weights(g.side(), std::move(log_w));
}

double tv_of_rows(const Eigen::MatrixXd& m, std::span<const double> pi) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) acc += std::fabs(m(r, c) - pi[static_cast<std::size_t>(c)]);
    worst = std::max(worst, 0.5 * acc);
  }
  return worst;
}

}  // namespace

int max_side(Capability capability) noexcept { return capability == Capability::measure ? 4 : 3; }

void require_size(int side, Capability capability) {
  if (side > max_side(capability)) {
    throw SizeGuardError(std::string("exact ") +
                         (capability == Capability::measure ? "measure" : "kernel") +
                         " computation refused for L = " + std::to_string(side) + " (limit L <= " +
                         std::to_string(max_side(capability)) + ")");
  }
}

std::vector<SpinConfiguration> enumerate(const TorusGeometry& g, Capability capability) {
  require_size(g.side(), capability);
  std::vector<SpinConfiguration> out;
  out.reserve(state_count(g));
  for (std::uint64_t code = 0; code < state_count(g); ++code) {
    out.push_back(SpinConfiguration::decode(g.side(), code));
  }
  return out;
}

double ExactDistribution::total() const {
  double acc = 0.0;
  for (double w : weights) acc += w;
  return acc;
}

ExactDistribution stationary_pca(const PcaParameters& params, const TorusGeometry& g) {
  return measure_from(g, [&](const SpinConfiguration& s) { return log_z_sigma(g, params, s); });
}

ExactDistribution gibbs(const PcaParameters& params, const TorusGeometry& g) {
  return measure_from(g, [&](const SpinConfiguration& s) {
    return -2.0 * params.J() * contour_stats(g, s).length;
  });
}

ExactDistribution gibbs_energy_form(const PcaParameters& params, const TorusGeometry& g) {
  return measure_from(g, [&](const SpinConfiguration& s) { return -ising_energy(g, params, s); });
}

double tv_distance(std::span<const double> mu, std::span<const double> nu) {
  if (mu.size() != nu.size()) throw std::invalid_argument("distributions have different supports");
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) acc += std::fabs(mu[i] - nu[i]);
  return 0.5 * acc;
}

double tv_distance(const ExactDistribution& mu, const ExactDistribution& nu) {
  if (mu.side != nu.side) throw std::invalid_argument("distributions live on different lattices");
  return tv_distance(mu.weights, nu.weights);
}

double reweighting_l1(const PcaParameters& params, const TorusGeometry& g) {
  require_size(g.side(), Capability::measure);
  const std::size_t n = state_count(g);
  std::vector<double> log_gibbs(n);
  std::vector<double> log_f_values(n);
  for (std::size_t code = 0; code < n; ++code) {
    const SpinConfiguration s = SpinConfiguration::decode(g.side(), code);
    log_gibbs[code] = -2.0 * params.J() * contour_stats(g, s).length;
    log_f_values[code] = log_f(g, s, params).log_f;
  }
  const double log_zg = numerics::log_sum_exp(log_gibbs);
  for (double& v : log_gibbs) v -= log_zg;
  // log pi_G(f)
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) terms[i] = log_gibbs[i] + log_f_values[i];
  const double log_mean_f = numerics::log_sum_exp(terms);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // pi_G |f / pi_G(f) - 1|, kept as a difference of two probabilities
    acc += std::fabs(std::exp(terms[i] - log_mean_f) - std::exp(log_gibbs[i]));
  }
  return acc;
}

double tv_via_f(const PcaParameters& params, const TorusGeometry& g) {
  return 0.5 * reweighting_l1(params, g);
}

Eigen::MatrixXd pca_kernel(const PcaParameters& params, const TorusGeometry& g) {
  require_size(g.side(), Capability::kernel);
  const std::size_t n = state_count(g);
  const int sites = g.site_count();
  Eigen::MatrixXd kernel(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<double> p_plus(static_cast<std::size_t>(sites));
  for (std::size_t from = 0; from < n; ++from) {
    const SpinConfiguration s = SpinConfiguration::decode(g.side(), from);
    for (int x = 0; x < sites; ++x) {
      p_plus[static_cast<std::size_t>(x)] =
          local_prob(params, s.spin(g.neighbor(x, Direction::down)),
                     s.spin(g.neighbor(x, Direction::left)), s.spin(x));
    }
    for (std::size_t to = 0; to < n; ++to) {
      double p = 1.0;
      for (int x = 0; x < sites; ++x) {
        const double px = p_plus[static_cast<std::size_t>(x)];
        p *= ((to >> x) & 1U) ? px : 1.0 - px;
      }
      kernel(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)) = p;
    }
  }
  return kernel;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> glauber_kernel(const PcaParameters& params,
                                                            const TorusGeometry& g) {
  require_size(g.side(), Capability::kernel);
  const std::size_t n = state_count(g);
  const int sites = g.site_count();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(n * static_cast<std::size_t>(sites + 1));
  for (std::size_t from = 0; from < n; ++from) {
    const SpinConfiguration s = SpinConfiguration::decode(g.side(), from);
    double stay = 1.0;
    for (int x = 0; x < sites; ++x) {
      const double p = glauber_acceptance(g, params, s, x) / sites;
      if (p > 0.0) {
        entries.emplace_back(static_cast<int>(from), static_cast<int>(from ^ (std::size_t{1} << x)), p);
        stay -= p;
      }
    }
    entries.emplace_back(static_cast<int>(from), static_cast<int>(from), stay);
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> kernel(static_cast<Eigen::Index>(n),
                                                      static_cast<Eigen::Index>(n));
  kernel.setFromTriplets(entries.begin(), entries.end());
  return kernel;
}

double max_row_sum_deviation(const Eigen::MatrixXd& kernel) {
  return (kernel.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

double stationarity_residual(const Eigen::MatrixXd& kernel, std::span<const double> pi) {
  const Eigen::Map<const Eigen::RowVectorXd> p(pi.data(), static_cast<Eigen::Index>(pi.size()));
  const Eigen::RowVectorXd moved = p * kernel;
  return (moved - p).cwiseAbs().maxCoeff();
}

double worst_case_tv(const Eigen::MatrixXd& power, std::span<const double> pi) {
  return tv_of_rows(power, pi);
}

std::vector<double> tv_curve(const Eigen::MatrixXd& kernel, std::span<const double> pi,
                             std::span<const std::int64_t> t_grid) {
  std::vector<double> out;
  out.reserve(t_grid.size());
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(kernel.rows(), kernel.cols());
  std::vector<Eigen::MatrixXd> squares{kernel};  // kernel^{2^i}, grown on demand
  std::int64_t t = 0;
  for (std::int64_t target : t_grid) {
    if (target < t) throw std::invalid_argument("t grid must be sorted ascending");
    std::int64_t gap = target - t;
    for (std::size_t i = 0; gap > 0; ++i, gap >>= 1) {
      if (i == squares.size()) squares.push_back(squares.back() * squares.back());
      if (gap & 1) power = power * squares[i];
    }
    t = target;
    out.push_back(tv_of_rows(power, pi));
  }
  return out;
}

MixingTime exact_mixing_time(const Eigen::MatrixXd& kernel, std::span<const double> pi,
                             double threshold, std::int64_t cap) {
  if (kernel.rows() != static_cast<Eigen::Index>(pi.size())) {
    throw std::invalid_argument("kernel and stationary vector disagree in size");
  }
  if (tv_of_rows(kernel, pi) <= threshold) return {1, false};
  // powers[i] = P^{2^i}; stop at the first power that reaches the threshold
  std::vector<Eigen::MatrixXd> powers{kernel};
  while (true) {
    const std::int64_t reach = std::int64_t{1} << powers.size();
    Eigen::MatrixXd next = powers.back() * powers.back();
    const bool done = tv_of_rows(next, pi) <= threshold;
    powers.push_back(std::move(next));
    if (done) break;
    if (reach > cap) return {cap, true};
  }
  // d(2^{k-1}) > threshold >= d(2^k); lift t while d(t) stays above the threshold
  const std::size_t k = powers.size() - 1;
  std::int64_t t = std::int64_t{1} << (k - 1);
  Eigen::MatrixXd current = powers[k - 1];
  for (std::size_t i = k - 1; i-- > 0;) {
    Eigen::MatrixXd candidate = current * powers[i];
    if (tv_of_rows(candidate, pi) > threshold) {
      current = std::move(candidate);
      t += std::int64_t{1} << i;
    }
  }
  if (t + 1 > cap) return {cap, true};
  return {t + 1, false};
}

MixingTime exact_mixing_time(const Eigen::MatrixXd& kernel, std::span<const double> pi) {
  return exact_mixing_time(kernel, pi, 1.0 / std::numbers::e, std::int64_t{1} << 40);
}

Theorem1Report theorem1_report(Regime regime, int side) {
  const TorusGeometry g(side);
  const PcaParameters params = PcaParameters::from_regime(regime, side);
  Theorem1Report r;
  r.side = side;
  r.k = regime.k;
  r.c = regime.c;
  r.J = params.J();
  r.q = params.q();
  r.tv_exact = tv_distance(stationary_pca(params, g), gibbs(params, g));
  r.bound_shape = std::pow(side, 1.0 - regime.c / 2.0) + std::pow(side, 2.0 - 2.0 * regime.k);
  return r;
}

}  // namespace pcaising::exact
