#include "pcaising/kernel.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "pcaising/numerics.hpp"

namespace pcaising {

namespace {

void require_geometry(const TorusGeometry& g, const SpinConfiguration& s) {
  if (g.side() != s.side()) throw std::invalid_argument("configuration does not match geometry");
}

int code_of(bool down, bool left, bool self) noexcept {
  return (static_cast<int>(down) << 2) | (static_cast<int>(left) << 1) | static_cast<int>(self);
}

}  // namespace

double local_prob(const PcaParameters& params, int down, int left, int self) {
  const double h = params.J() * (down + left) + params.q() * self;
  return numerics::sigmoid(2.0 * h);
}

double pair_hamiltonian(const TorusGeometry& g, const PcaParameters& params,
                        const SpinConfiguration& sigma, const SpinConfiguration& tau) {
  require_geometry(g, sigma);
  require_geometry(g, tau);
  double acc = 0.0;
  for (int x = 0; x < g.site_count(); ++x) {
    const int s = sigma.spin(x);
    const int t_up = tau.spin(g.neighbor(x, Direction::up));
    const int t_right = tau.spin(g.neighbor(x, Direction::right));
    acc += params.J() * s * (t_up + t_right) + params.q() * s * tau.spin(x);
  }
  return -acc;
}

double pair_hamiltonian_by_target(const TorusGeometry& g, const PcaParameters& params,
                                  const SpinConfiguration& sigma, const SpinConfiguration& tau) {
  require_geometry(g, sigma);
  require_geometry(g, tau);
  double acc = 0.0;
  for (int x = 0; x < g.site_count(); ++x) {
    const int t = tau.spin(x);
    const int s_down = sigma.spin(g.neighbor(x, Direction::down));
    const int s_left = sigma.spin(g.neighbor(x, Direction::left));
    acc += params.J() * t * (s_down + s_left) + params.q() * sigma.spin(x) * t;
  }
  return -acc;
}

double ising_energy(const TorusGeometry& g, const PcaParameters& params,
                    const SpinConfiguration& sigma) {
  require_geometry(g, sigma);
  long sum = 0;
  for (int x = 0; x < g.site_count(); ++x) {
    const int s = sigma.spin(x);
    sum += s * sigma.spin(g.neighbor(x, Direction::up)) + s * sigma.spin(g.neighbor(x, Direction::right));
  }
  return -params.J() * static_cast<double>(sum);
}

double log_z_sigma(const TorusGeometry& g, const PcaParameters& params,
                   const SpinConfiguration& sigma) {
  const ContourStats st = contour_stats(g, sigma);
  const double J = params.J();
  const double q = params.q();
  const int n = g.site_count();
  return n * std::log(2.0) + st.n_dl * numerics::log_cosh(2.0 * J - q) +
         (st.length - 2 * st.n_dl) * numerics::log_cosh(q) +
         (n - st.length + st.n_dl) * numerics::log_cosh(2.0 * J + q);
}

double log_z_sigma_reweighted(const TorusGeometry& g, const PcaParameters& params,
                              const SpinConfiguration& sigma) {
  require_geometry(g, sigma);
  const double J = params.J();
  const double log_delta = -2.0 * params.q();
  double acc = params.q() * g.site_count() - ising_energy(g, params, sigma);
  for (int x = 0; x < g.site_count(); ++x) {
    const int s = sigma.spin(x);
    const int align = s * sigma.spin(g.neighbor(x, Direction::up)) +
                      s * sigma.spin(g.neighbor(x, Direction::right));
    acc += numerics::softplus(log_delta - 2.0 * J * align);
  }
  return acc;
}

ExponentTriples weak_symmetry_exponents(const TorusGeometry& g, const SpinConfiguration& sigma) {
  const ContourStats st = contour_stats(g, sigma);
  const int n = g.site_count();
  return {{st.n_dl, st.length - 2 * st.n_dl, n - st.length + st.n_dl},
          {st.n_ur, st.length - 2 * st.n_ur, n - st.length + st.n_ur}};
}

double transition_log_prob(const TorusGeometry& g, const PcaParameters& params,
                           const SpinConfiguration& sigma, const SpinConfiguration& tau) {
  return -pair_hamiltonian(g, params, sigma, tau) - log_z_sigma(g, params, sigma);
}

const char* to_string(UpdateClass c) noexcept {
  switch (c) {
    case UpdateClass::typical: return "typical";
    case UpdateClass::atypical: return "atypical";
    case UpdateClass::neutral: return "neutral";
  }
  return "unknown";
}

UpdateClass classify_event(const TorusGeometry& g, const SpinConfiguration& before, int site,
                           int outcome) {
  require_geometry(g, before);
  const int down = before.spin(g.neighbor(site, Direction::down));
  const int left = before.spin(g.neighbor(site, Direction::left));
  if (down != left) return UpdateClass::neutral;
  return outcome == down ? UpdateClass::typical : UpdateClass::atypical;
}

PcaStepper::PcaStepper(const TorusGeometry& geometry, const PcaParameters& params)
    : geometry_(geometry), params_(params), window_width_(params.atypical_width()) {
  for (int code = 0; code < 8; ++code) {
    const int down = (code & 4) ? 1 : -1;
    const int left = (code & 2) ? 1 : -1;
    const int self = (code & 1) ? 1 : -1;
    thresholds_[static_cast<std::size_t>(code)] = local_prob(params, down, left, self);
  }
}

bool PcaStepper::forces_typical(const RandomField& field) const noexcept {
  const auto& w = field.window();
  return w && params_.has_window() && w->lower >= window_width_ && w->upper <= 1.0 - window_width_;
}

void PcaStepper::advance(const SpinConfiguration& current, const RandomField& field,
                         std::int64_t step, SpinConfiguration& next, StepSummary& summary) const {
  require_geometry(geometry_, current);
  const int side = geometry_.side();
  if (next.side() != side) next = SpinConfiguration::all_minus(side);
  summary = StepSummary{};
  const std::uint64_t key = field.step_key(step);
  const double lo = window_width_;
  const double hi = 1.0 - window_width_;

  if (current.words_per_row() == 1) {
    const std::uint64_t mask = side == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << side) - 1;
    const bool zero_temperature = forces_typical(field);
    for (int j = 0; j < side; ++j) {
      const std::uint64_t cur = current.row(j)[0];
      const std::uint64_t down = current.row(j == 0 ? side - 1 : j - 1)[0];
      const std::uint64_t left = ((cur << 1) | (cur >> (side - 1))) & mask;
      const int base = side * j;
      if (zero_temperature) {
        // aligned sites copy their neighbours; split sites draw
        std::uint64_t split = (down ^ left) & mask;
        std::uint64_t out = down & left;
        summary.neutral_count += std::popcount(split);
        while (split != 0) {
          const int i = std::countr_zero(split);
          split &= split - 1;
          const bool s = (cur >> i) & 1U;
          const double t = thresholds_[static_cast<std::size_t>(code_of(true, false, s))];
          if (field.uniform_at(key, base + i) <= t) out |= std::uint64_t{1} << i;
        }
        next.row(j)[0] = out;
        continue;
      }
      std::uint64_t out = 0;
      for (int i = 0; i < side; ++i) {
        const bool d = (down >> i) & 1U;
        const bool l = (left >> i) & 1U;
        const bool s = (cur >> i) & 1U;
        const double u = field.uniform_at(key, base + i);
        const bool plus = u <= thresholds_[static_cast<std::size_t>(code_of(d, l, s))];
        out |= static_cast<std::uint64_t>(plus) << i;
        summary.window_exits += (u <= lo) | (u >= hi);
        if (d == l) {
          if (plus != d) {
            if (summary.atypical_count == 0) summary.first_atypical_site = base + i;
            ++summary.atypical_count;
          }
        } else {
          ++summary.neutral_count;
        }
      }
      next.row(j)[0] = out;
    }
    return;
  }

  for (int x = 0; x < geometry_.site_count(); ++x) {
    const bool d = current.is_plus(geometry_.neighbor(x, Direction::down));
    const bool l = current.is_plus(geometry_.neighbor(x, Direction::left));
    const bool s = current.is_plus(x);
    const double u = field.uniform_at(key, x);
    const bool plus = u <= thresholds_[static_cast<std::size_t>(code_of(d, l, s))];
    next.set(x, plus ? 1 : -1);
    summary.window_exits += (u <= lo) | (u >= hi);
    if (d == l) {
      if (plus != d) {
        if (summary.atypical_count == 0) summary.first_atypical_site = x;
        ++summary.atypical_count;
      }
    } else {
      ++summary.neutral_count;
    }
  }
}

void PcaStepper::advance(const SpinConfiguration& current, const RandomField& field,
                         std::int64_t step, SpinConfiguration& next,
                         std::vector<UpdateEvent>& events) const {
  StepSummary summary;
  advance(current, field, step, next, summary);
  events.clear();
  events.reserve(static_cast<std::size_t>(geometry_.site_count()));
  for (int x = 0; x < geometry_.site_count(); ++x) {
    events.push_back({x, step, classify_event(geometry_, current, x, next.spin(x))});
  }
}

StepResult pca_step(const TorusGeometry& g, const PcaParameters& params,
                    const SpinConfiguration& sigma, const RandomField& field, std::int64_t step) {
  const PcaStepper stepper(g, params);
  StepResult result{SpinConfiguration::all_minus(g.side()), {}};
  stepper.advance(sigma, field, step, result.next, result.events);
  return result;
}

double glauber_acceptance(const TorusGeometry& g, const PcaParameters& params,
                          const SpinConfiguration& sigma, int site) {
  require_geometry(g, sigma);
  int field = 0;
  for (Direction d : all_directions) field += sigma.spin(g.neighbor(site, d));
  const double delta_h = 2.0 * params.J() * sigma.spin(site) * field;
  return delta_h <= 0.0 ? 1.0 : std::exp(-delta_h);
}

SpinConfiguration glauber_step(const TorusGeometry& g, const PcaParameters& params,
                               const SpinConfiguration& sigma, Engine& engine) {
  const int x = uniform_index(engine, g.site_count());
  SpinConfiguration next = sigma;
  if (uniform01(engine) < glauber_acceptance(g, params, sigma, x)) next.flip(x);
  return next;
}

}  // namespace pcaising
