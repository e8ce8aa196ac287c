#include "pcaising/effective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pcaising/kernel.hpp"
#include "pcaising/numerics.hpp"

namespace pcaising {

WalkParameters walk_from_agreement(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return {s, s * s, (1.0 - s) * (1.0 - s)};
}

double neutral_agreement_prob(const PcaParameters& params, bool favorable) {
  const double t = numerics::sigmoid(2.0 * params.q() * (favorable ? 1.0 : -1.0));
  if (!params.has_window()) return t;
  const double w = params.atypical_width();
  return std::clamp((t - w) / (1.0 - 2.0 * w), 0.0, 1.0);
}

WalkParameters walk_params(const PcaParameters& params, bool favorable) {
  if (params.q() < 0.0) throw std::invalid_argument("walk parameters need q >= 0");
  return walk_from_agreement(neutral_agreement_prob(params, favorable));
}

WalkParameters walk_params_unconditioned(double q, bool favorable) {
  if (q < 0.0) throw std::invalid_argument("walk parameters need q >= 0");
  return walk_from_agreement(numerics::sigmoid(2.0 * q * (favorable ? 1.0 : -1.0)));
}

namespace {

void check_walk(double p_plus, double p_minus, int L, int start) {
  if (!(p_plus >= 0.0 && p_minus >= 0.0 && p_plus + p_minus <= 1.0 + 1e-15)) {
    throw std::invalid_argument("walk probabilities must be non-negative with sum at most 1");
  }
  if (L < 1) throw std::invalid_argument("walk length must be positive");
  if (start < 0 || start > L) throw std::invalid_argument("walk start must lie in [0, L]");
}

}  // namespace

double hit_prob(double p_plus, double p_minus, int L, int start) {
  check_walk(p_plus, p_minus, L, start);
  if (start == L) return 1.0;
  if (start == 0 || p_plus == 0.0) return 0.0;
  if (p_minus == 0.0) return 1.0;
  if (p_plus == p_minus) return static_cast<double>(start) / L;
  const double lr = std::log(p_minus) - std::log(p_plus);
  if (lr < 0.0) return std::expm1(start * lr) / std::expm1(L * lr);
  return std::exp((start - L) * lr) * std::expm1(-start * lr) / std::expm1(-L * lr);
}

double expected_absorption(double p_plus, double p_minus, int L, int start) {
  check_walk(p_plus, p_minus, L, start);
  if (start == 0 || start == L) return 0.0;
  if (p_plus == 0.0 && p_minus == 0.0) return std::numeric_limits<double>::infinity();
  if (p_plus == 0.0) return start / p_minus;
  if (p_minus == 0.0) return (L - start) / p_plus;
  if (p_plus == p_minus) return static_cast<double>(start) * (L - start) / (2.0 * p_plus);
  const double lr = std::log(p_minus) - std::log(p_plus);
  if (std::fabs(lr * L) >= 1.0) {
    return (L * hit_prob(p_plus, p_minus, L, start) - start) / (p_plus - p_minus);
  }
  // close to symmetric: differences d_k = E_k - E_{k-1} from the recursion
  const double r = p_minus / p_plus;
  std::vector<double> S(static_cast<std::size_t>(L) + 1, 0.0);  // S_n = sum_{j<n} r^j
  double power = 1.0;
  for (int n = 1; n <= L; ++n) {
    S[n] = S[n - 1] + power;
    power *= r;
  }
  double total = 0.0;
  for (int k = 0; k < L; ++k) total += S[k];
  const double d1 = total / (p_plus * S[L]);
  double partial = 0.0;
  for (int k = 0; k < start; ++k) partial += S[k];
  return d1 * S[start] - partial / p_plus;
}

bool is_favorable(const std::vector<int>& xi, int m) {
  const int L = static_cast<int>(xi.size());
  return xi[static_cast<std::size_t>(wrap(m, L))] != xi[static_cast<std::size_t>(wrap(m + 1, L))];
}

std::vector<double> discrepancy_site_law(const TorusGeometry& g, const PcaParameters& params,
                                         const SpinConfiguration& sigma) {
  if (!is_diagonal(g, sigma)) throw std::invalid_argument("discrepancy law needs a diagonal configuration");
  // |I_x| / (1 - |I_x|) = exp(-4J - 2 q sigma_x sigma_x^l); the J factor cancels
  std::vector<double> law(static_cast<std::size_t>(g.site_count()));
  double total = 0.0;
  for (int x = 0; x < g.site_count(); ++x) {
    const int product = sigma.spin(x) * sigma.spin(g.neighbor(x, Direction::left));
    const double f = std::exp(-2.0 * params.q() * product);
    law[static_cast<std::size_t>(x)] = f;
    total += f;
  }
  for (double& p : law) p /= total;
  return law;
}

int sample_discrepancy_site(const TorusGeometry& g, const PcaParameters& params,
                            const SpinConfiguration& sigma, Engine& engine) {
  const auto law = discrepancy_site_law(g, params, sigma);
  double u = uniform01(engine);
  for (std::size_t x = 0; x < law.size(); ++x) {
    u -= law[x];
    if (u <= 0.0) return static_cast<int>(x);
  }
  return static_cast<int>(law.size()) - 1;
}

WalkOutcome run_discrepancy_walk(const WalkParameters& walk, int L, int start, std::uint64_t seed,
                                 std::int64_t budget) {
  check_walk(walk.p_plus, walk.p_minus, L, start);
  Engine engine(seed);
  WalkOutcome out;
  int N = start;
  while (N != 0 && N != L) {
    if (out.duration >= budget) {
      out.absorbed_at = -1;
      return out;
    }
    ++out.duration;
    const double u = uniform01(engine);
    if (u < walk.p_plus) {
      ++N;
    } else if (u < walk.p_plus + walk.p_minus) {
      --N;
    }
  }
  out.absorbed_at = N;
  return out;
}

WalkOutcome run_discrepancy_walk(const PcaParameters& params, const DiscrepancyState& state,
                                 std::uint64_t seed, std::int64_t budget) {
  if (state.side < 2) throw std::invalid_argument("discrepancy walk needs L >= 2");
  return run_discrepancy_walk(walk_params(params, state.favorable), state.side, state.N, seed, budget);
}

namespace {

struct ChainRates {
  double favorable = 0.0;    // per favorable diagonal
  double unfavorable = 0.0;  // per unfavorable diagonal
  double total = 0.0;
};

// Flip probability per renormalized step is birth weight times the
// probability that the discrepancy walk from 1 reaches L.
class EffectiveRates {
 public:
  EffectiveRates(const PcaParameters& params, int L) : L_(L) {
    if (L < 2) throw std::invalid_argument("effective chain needs L >= 2");
    const auto fav = walk_params(params, true);
    const auto unf = walk_params(params, false);
    hit_fav_ = hit_prob(fav.p_plus, fav.p_minus, L, 1);
    hit_unf_ = hit_prob(unf.p_plus, unf.p_minus, L, 1);
    w_fav_ = std::exp(2.0 * params.q());
    w_unf_ = std::exp(-2.0 * params.q());
  }

  ChainRates rates(int n_favorable, bool favorable_only) const {
    const double norm = n_favorable * w_fav_ + (L_ - n_favorable) * w_unf_;
    ChainRates r;
    r.favorable = w_fav_ * hit_fav_ / norm;
    r.unfavorable = favorable_only ? 0.0 : w_unf_ * hit_unf_ / norm;
    r.total = n_favorable * r.favorable + (L_ - n_favorable) * r.unfavorable;
    return r;
  }

 private:
  int L_;
  double hit_fav_, hit_unf_, w_fav_, w_unf_;
};

void check_xi(const std::vector<int>& xi) {
  if (xi.size() < 2) throw std::invalid_argument("xi needs at least two diagonals");
  for (int v : xi) {
    if (v != 1 && v != -1) throw std::invalid_argument("xi entries must be +1 or -1");
  }
}

std::int64_t geometric_steps(double p, Engine& engine) {
  if (p >= 1.0) return 1;
  const double k = std::floor(std::log(uniform01(engine)) / std::log1p(-p));
  if (!(k < 9.0e18)) return std::numeric_limits<std::int64_t>::max() / 4;
  return 1 + static_cast<std::int64_t>(k);
}

EffectiveRun run_chain(const PcaParameters& params, std::vector<int> xi, std::uint64_t seed,
                       const EffectiveRunOptions& options, bool stop_at_minus) {
  check_xi(xi);
  const int L = static_cast<int>(xi.size());
  const EffectiveRates rates(params, L);
  Engine engine(seed);
  EffectiveRun run;
  std::int64_t t = 0;
  std::vector<int> fav, unf;
  auto plus_count = [&] { return static_cast<int>(std::count(xi.begin(), xi.end(), 1)); };
  int plus = plus_count();
  while (true) {
    if (plus == L) {
      run.reached_plus = true;
      run.time = StoppingTime::at(t);
      break;
    }
    if (stop_at_minus && plus == 0) {
      run.time = StoppingTime::at(t);
      break;
    }
    fav.clear();
    unf.clear();
    for (int m = 0; m < L; ++m) (is_favorable(xi, m) ? fav : unf).push_back(m);
    const ChainRates r = rates.rates(static_cast<int>(fav.size()), options.favorable_only);
    if (r.total <= 0.0) {
      run.time = {options.budget, true};
      break;
    }
    const std::int64_t hold = geometric_steps(r.total, engine);
    if (hold > options.budget - t) {
      run.time = {options.budget, true};
      break;
    }
    t += hold;
    const double u = uniform01(engine) * r.total;
    const double fav_mass = static_cast<double>(fav.size()) * r.favorable;
    int m;
    if (u < fav_mass) {
      m = fav[static_cast<std::size_t>(uniform_index(engine, static_cast<int>(fav.size())))];
    } else {
      m = unf[static_cast<std::size_t>(uniform_index(engine, static_cast<int>(unf.size())))];
    }
    xi[static_cast<std::size_t>(m)] = -xi[static_cast<std::size_t>(m)];
    plus += xi[static_cast<std::size_t>(m)];
    ++run.flips;
    if (options.record_events) run.events.push_back({t, m, xi[static_cast<std::size_t>(m)]});
  }
  run.final_xi = std::move(xi);
  return run;
}

}  // namespace

EffectiveLaw effective_step_law(const PcaParameters& params, const std::vector<int>& xi) {
  check_xi(xi);
  const int L = static_cast<int>(xi.size());
  const EffectiveRates rates(params, L);
  int n_fav = 0;
  for (int m = 0; m < L; ++m) n_fav += is_favorable(xi, m);
  const ChainRates r = rates.rates(n_fav, false);
  EffectiveLaw law;
  law.flip.resize(static_cast<std::size_t>(L));
  double total = 0.0;
  for (int m = 0; m < L; ++m) {
    law.flip[static_cast<std::size_t>(m)] = is_favorable(xi, m) ? r.favorable : r.unfavorable;
    total += law.flip[static_cast<std::size_t>(m)];
  }
  law.stay = 1.0 - total;
  return law;
}

int effective_step(const PcaParameters& params, std::vector<int>& xi, Engine& engine) {
  const auto law = effective_step_law(params, xi);
  double u = uniform01(engine);
  for (std::size_t m = 0; m < law.flip.size(); ++m) {
    u -= law.flip[m];
    if (u < 0.0) {
      xi[m] = -xi[m];
      return static_cast<int>(m);
    }
  }
  return -1;
}

EffectiveRun effective_tunneling_time(const PcaParameters& params, int L, std::uint64_t seed,
                                      const EffectiveRunOptions& options) {
  return run_chain(params, std::vector<int>(static_cast<std::size_t>(L), -1), seed, options, false);
}

EffectiveRun effective_excursion(const PcaParameters& params, std::vector<int> xi, std::uint64_t seed,
                                 const EffectiveRunOptions& options) {
  return run_chain(params, std::move(xi), seed, options, true);
}

std::optional<DefectArc> defect_arc(const TorusGeometry& g, const SpinConfiguration& sigma, int m,
                                    int reference) {
  const auto sites = g.diagonal_sites(wrap(m, g.side()));
  const int L = g.side();
  std::vector<bool> off(static_cast<std::size_t>(L));
  int count = 0;
  for (int k = 0; k < L; ++k) {
    off[static_cast<std::size_t>(k)] = sigma.spin(sites[static_cast<std::size_t>(k)]) != reference;
    count += off[static_cast<std::size_t>(k)];
  }
  if (count == 0) return DefectArc{0, 0};
  if (count == L) return DefectArc{0, L};
  int starts = 0;
  int start = 0;
  for (int k = 0; k < L; ++k) {
    if (off[static_cast<std::size_t>(k)] && !off[static_cast<std::size_t>(wrap(k - 1, L))]) {
      ++starts;
      start = g.site(sites[static_cast<std::size_t>(k)]).i;
    }
  }
  if (starts != 1) return std::nullopt;
  return DefectArc{start, count};
}

ExcursionResult zero_temperature_excursion(const TorusGeometry& g, const PcaParameters& params,
                                           const std::vector<int>& xi, int site, std::uint64_t seed,
                                           std::int64_t budget) {
  check_xi(xi);
  if (static_cast<int>(xi.size()) != g.side()) throw std::invalid_argument("xi must have length L");
  if (site < 0 || site >= g.site_count()) throw std::invalid_argument("site out of range");
  if (!params.has_window()) throw std::invalid_argument("zero-temperature dynamics needs 2J > q");
  const int L = g.side();
  const int home = g.diagonal_index(site);
  const int reference = xi[static_cast<std::size_t>(home)];
  SpinConfiguration sigma = from_diagonal_spins(g, xi);
  sigma.flip(site);
  DiagonalTracker tracker(g, sigma);
  const PcaStepper stepper(g, params);
  const RandomField field = RandomField::conditioned(seed, params.atypical_width());
  SpinConfiguration next = sigma;
  ExcursionResult out;
  out.eta_diagonal = home;
  int length = 1;
  StepSummary summary;
  for (std::int64_t n = 1; n <= budget; ++n) {
    stepper.advance(sigma, field, n, next, summary);
    tracker.advance(sigma, next);
    std::swap(sigma, next);
    const auto arc = defect_arc(g, sigma, static_cast<int>((home + n) % L), reference);
    if (!arc || tracker.nonconstant_count() > 1) {
      out.arc_contiguous = false;
    } else {
      out.max_arc_change = std::max(out.max_arc_change, std::abs(arc->length - length));
      length = arc->length;
    }
    if (tracker.is_diagonal()) {
      out.R = StoppingTime::at(n);
      out.flipped = (tracker.eta_plus(home) == L) != (reference > 0);
      return out;
    }
  }
  out.R = {budget, true};
  return out;
}

DirectStep direct_renormalized_step(const TorusGeometry& g, const PcaParameters& params,
                                    const std::vector<int>& xi, std::uint64_t seed, DirectMode mode,
                                    std::int64_t budget) {
  check_xi(xi);
  if (static_cast<int>(xi.size()) != g.side()) throw std::invalid_argument("xi must have length L");
  const bool conditioned = mode == DirectMode::conditioned;
  if (conditioned && !params.has_window()) throw std::invalid_argument("conditioned step needs 2J > q");
  const int L = g.side();
  SpinConfiguration sigma = from_diagonal_spins(g, xi);
  SpinConfiguration next = sigma;
  DiagonalTracker tracker(g, sigma);
  const PcaStepper stepper(g, params);
  const RandomField free_field(seed);
  DirectStep out;
  StepSummary summary;
  std::int64_t n = 0;
  std::int64_t attempt = 0;
  // until the first atypical step; under conditioning a step with two or
  // more atypical updates is drawn again with fresh uniforms
  while (out.S.censored) {
    if (n >= budget || attempt >= 4 * budget) {
      out.outcome = -2;
      return out;
    }
    ++attempt;
    stepper.advance(sigma, free_field, attempt, next, summary);
    if (conditioned && summary.atypical_count >= 2) {
      ++out.redraws;
      continue;
    }
    ++n;
    tracker.advance(sigma, next);
    std::swap(sigma, next);
    if (summary.atypical_count > 0) out.S = StoppingTime::at(n);
  }
  const RandomField walk_field = conditioned
                                     ? RandomField::conditioned(derive_seed(seed, 0x5157), params.atypical_width())
                                     : free_field;
  const std::int64_t offset = conditioned ? 0 : attempt - n;
  while (!tracker.is_diagonal()) {
    if (n >= budget) {
      out.outcome = -2;
      out.R = {n, true};
      return out;
    }
    ++n;
    stepper.advance(sigma, walk_field, n + offset, next, summary);
    tracker.advance(sigma, next);
    std::swap(sigma, next);
  }
  out.R = StoppingTime::at(n);
  out.xi_after.resize(static_cast<std::size_t>(L));
  int changed = 0;
  int which = -1;
  for (int m = 0; m < L; ++m) {
    const int v = tracker.eta_plus(m) == L ? 1 : -1;
    out.xi_after[static_cast<std::size_t>(m)] = v;
    if (v != xi[static_cast<std::size_t>(m)]) {
      ++changed;
      which = m;
    }
  }
  out.outcome = changed == 0 ? -1 : (changed == 1 ? which : -2);
  return out;
}

}  // namespace pcaising
