#include "pcaising/glauber.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "pcaising/errors.hpp"

namespace pcaising {

GlauberJumpChain::GlauberJumpChain(const TorusGeometry& g, const PcaParameters& params,
                                   const SpinConfiguration& start)
    : geometry_(g) {
  for (int c = 0; c < 5; ++c) {
    const double delta_h = 2.0 * params.J() * (2 * c - 4);
    acceptance_[static_cast<std::size_t>(c)] = delta_h <= 0.0 ? 1.0 : std::exp(-delta_h);
  }
  reset(start);
}

void GlauberJumpChain::reset(const SpinConfiguration& start) {
  if (start.side() != geometry_.side()) throw std::invalid_argument("configuration does not match the torus");
  sigma_ = start;
  plus_ = start.count_plus();
  for (auto& m : members_) m.clear();
  class_.assign(static_cast<std::size_t>(geometry_.site_count()), 0);
  position_.assign(static_cast<std::size_t>(geometry_.site_count()), 0);
  for (int x = 0; x < geometry_.site_count(); ++x) place(x);
}

int GlauberJumpChain::class_of(int x) const noexcept {
  int field = 0;
  for (Direction d : all_directions) field += sigma_.spin(geometry_.neighbor(x, d));
  return (sigma_.spin(x) * field + 4) / 2;
}

void GlauberJumpChain::place(int x) {
  const int c = class_of(x);
  auto& bucket = members_[static_cast<std::size_t>(c)];
  class_[static_cast<std::size_t>(x)] = c;
  position_[static_cast<std::size_t>(x)] = static_cast<int>(bucket.size());
  bucket.push_back(x);
}

void GlauberJumpChain::remove(int x) {
  auto& bucket = members_[static_cast<std::size_t>(class_[static_cast<std::size_t>(x)])];
  const int pos = position_[static_cast<std::size_t>(x)];
  const int last = bucket.back();
  bucket[static_cast<std::size_t>(pos)] = last;
  position_[static_cast<std::size_t>(last)] = pos;
  bucket.pop_back();
}

double GlauberJumpChain::flip_rate() const noexcept {
  double total = 0.0;
  for (int c = 0; c < 5; ++c) total += members_[static_cast<std::size_t>(c)].size() * acceptance_[static_cast<std::size_t>(c)];
  return total / geometry_.site_count();
}

void GlauberJumpChain::flip(int site) {
  std::array<int, 5> touched{site, -1, -1, -1, -1};
  int count = 1;
  for (Direction d : all_directions) {
    const int y = geometry_.neighbor(site, d);
    if (std::find(touched.begin(), touched.begin() + count, y) == touched.begin() + count) touched[static_cast<std::size_t>(count++)] = y;
  }
  for (int k = 0; k < count; ++k) remove(touched[static_cast<std::size_t>(k)]);
  sigma_.flip(site);
  plus_ += sigma_.is_plus(site) ? 1 : -1;
  for (int k = 0; k < count; ++k) place(touched[static_cast<std::size_t>(k)]);
}

std::int64_t GlauberJumpChain::jump(Engine& engine) {
  std::array<double, 5> mass{};
  double total = 0.0;
  for (int c = 0; c < 5; ++c) {
    mass[static_cast<std::size_t>(c)] = members_[static_cast<std::size_t>(c)].size() * acceptance_[static_cast<std::size_t>(c)];
    total += mass[static_cast<std::size_t>(c)];
  }
  const double rate = total / geometry_.site_count();
  std::int64_t held = 1;
  if (rate < 1.0) {
    const double k = std::floor(std::log(uniform01(engine)) / std::log1p(-rate));
    held += k < 9.0e18 ? static_cast<std::int64_t>(k) : std::numeric_limits<std::int64_t>::max() / 4;
  }
  double u = uniform01(engine) * total;
  int c = 4;
  for (int k = 0; k < 5; ++k) {
    if (mass[static_cast<std::size_t>(k)] <= 0.0) continue;
    c = k;
    if (u < mass[static_cast<std::size_t>(k)]) break;
    u -= mass[static_cast<std::size_t>(k)];
  }
  const auto& bucket = members_[static_cast<std::size_t>(c)];
  flip(bucket[static_cast<std::size_t>(uniform_index(engine, static_cast<int>(bucket.size())))]);
  return held;
}

StoppingTime glauber_hitting_time(const TorusGeometry& g, const PcaParameters& params,
                                  const SpinConfiguration& start, std::uint64_t seed,
                                  std::int64_t budget) {
  GlauberJumpChain chain(g, params, start);
  Engine engine(seed);
  const int target = g.site_count();
  std::int64_t t = 0;
  while (true) {
    t += chain.jump(engine);
    if (t > budget) return {budget, true};
    if (chain.plus_count() == target) return StoppingTime::at(t);
  }
}

namespace {

SpinConfiguration single_plus(int side) {
  SpinConfiguration s = SpinConfiguration::all_minus(side);
  s.set(0, 1);
  return s;
}

struct Particle {
  std::vector<SpinConfiguration> path;  // path[l - 1]: state at the first visit of level l
  int score = 0;
};

// Continues from the last stored state until the plus count hits 0 or L^2.
void extend(Particle& p, GlauberJumpChain& chain, Engine& engine, int top) {
  chain.reset(p.path.back());
  p.score = chain.plus_count();
  while (p.score < top) {
    chain.jump(engine);
    const int level = chain.plus_count();
    if (level == 0) return;
    if (level > p.score) {
      p.score = level;
      p.path.push_back(chain.state());
    }
  }
}

}  // namespace

SplittingEstimate glauber_escape_probability(const TorusGeometry& g, const PcaParameters& params,
                                             std::uint64_t seed, const SplittingOptions& options) {
  if (options.particles < 2) throw std::invalid_argument("splitting needs at least two particles");
  const int top = g.site_count();
  Engine engine(seed);
  GlauberJumpChain chain(g, params, single_plus(g.side()));
  std::vector<Particle> particles(static_cast<std::size_t>(options.particles));
  for (auto& p : particles) {
    p.path = {single_plus(g.side())};
    extend(p, chain, engine, top);
  }
  SplittingEstimate est;
  const double n = options.particles;
  std::vector<std::size_t> killed, alive;
  while (est.iterations < options.max_iterations) {
    int level = top;
    for (const auto& p : particles) level = std::min(level, p.score);
    if (level >= top) break;
    killed.clear();
    alive.clear();
    for (std::size_t i = 0; i < particles.size(); ++i) (particles[i].score <= level ? killed : alive).push_back(i);
    if (alive.empty()) {
      est.extinct = true;
      est.p = 0.0;
      est.log_p = -std::numeric_limits<double>::infinity();
      return est;
    }
    est.log_p += std::log1p(-static_cast<double>(killed.size()) / n);
    ++est.iterations;
    for (std::size_t i : killed) {
      const Particle& parent = particles[alive[static_cast<std::size_t>(uniform_index(engine, static_cast<int>(alive.size())))]];
      Particle child;
      child.path.assign(parent.path.begin(), parent.path.begin() + level + 1);
      extend(child, chain, engine, top);
      particles[i] = std::move(child);
    }
  }
  est.p = std::exp(est.log_p);
  return est;
}

TunnelingEstimate glauber_tunneling_estimate(const TorusGeometry& g, const PcaParameters& params,
                                             std::uint64_t seed, const SplittingOptions& options,
                                             int excursion_samples) {
  if (excursion_samples < 1) throw std::invalid_argument("need at least one excursion sample");
  TunnelingEstimate out;
  const auto split = glauber_escape_probability(g, params, derive_seed(seed, 1), options);
  out.p_escape = split.p;
  out.log_p_escape = split.log_p;
  out.holding = std::exp(8.0 * params.J());
  Engine engine(derive_seed(seed, 2));
  GlauberJumpChain chain(g, params, single_plus(g.side()));
  const int top = g.site_count();
  double total = 0.0;
  for (int k = 0; k < excursion_samples; ++k) {
    chain.reset(single_plus(g.side()));
    std::int64_t t = 0;
    while (chain.plus_count() != 0 && chain.plus_count() != top) t += chain.jump(engine);
    total += static_cast<double>(t);
  }
  out.excursion_samples = excursion_samples;
  out.excursion = total / excursion_samples;
  out.log_mean_steps = std::log(out.holding + out.excursion) - out.log_p_escape;
  out.mean_steps = std::exp(out.log_mean_steps);
  out.mean_sweeps = out.mean_steps / g.site_count();
  return out;
}

ExactTunneling glauber_exact_tunneling(const TorusGeometry& g, const PcaParameters& params) {
  const int L = g.side();
  if (L > 4) throw SizeGuardError("lumped Glauber solve is limited to L <= 4");
  const int n = L * L;
  const std::uint32_t states = 1U << n;
  // translations combined with the eight symmetries of the square
  std::vector<std::vector<int>> maps;
  for (int a = 0; a < L; ++a) {
    for (int b = 0; b < L; ++b) {
      for (int s = 0; s < 8; ++s) {
        std::vector<int> m(static_cast<std::size_t>(n));
        for (int x = 0; x < n; ++x) {
          const int i = x % L, j = x / L;
          int u = i, v = j;
          if (s & 1) std::swap(u, v);
          if (s & 2) u = -u;
          if (s & 4) v = -v;
          m[static_cast<std::size_t>(x)] = wrap(u + a, L) + L * wrap(v + b, L);
        }
        maps.push_back(std::move(m));
      }
    }
  }
  std::vector<std::uint32_t> canonical(states);
  for (std::uint32_t c = 0; c < states; ++c) {
    std::uint32_t best = c;
    for (const auto& m : maps) {
      std::uint32_t image = 0;
      for (int x = 0; x < n; ++x) {
        if ((c >> x) & 1U) image |= 1U << m[static_cast<std::size_t>(x)];
      }
      best = std::min(best, image);
    }
    canonical[c] = best;
  }
  std::unordered_map<std::uint32_t, int> index;
  std::vector<std::uint32_t> reps;
  for (std::uint32_t c = 0; c < states; ++c) {
    if (canonical[c] == c) {
      index.emplace(c, static_cast<int>(reps.size()));
      reps.push_back(c);
    }
  }
  const int k = static_cast<int>(reps.size());
  const int minus = index.at(0);
  const int plus = index.at(states - 1);
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(k, k);
  std::vector<double> acceptance(5);
  for (int c = 0; c < 5; ++c) {
    const double delta_h = 2.0 * params.J() * (2 * c - 4);
    acceptance[static_cast<std::size_t>(c)] = delta_h <= 0.0 ? 1.0 : std::exp(-delta_h);
  }
  for (int r = 0; r < k; ++r) {
    const std::uint32_t c = reps[static_cast<std::size_t>(r)];
    for (int x = 0; x < n; ++x) {
      const int sx = ((c >> x) & 1U) ? 1 : -1;
      int field = 0;
      for (Direction d : all_directions) field += ((c >> g.neighbor(x, d)) & 1U) ? 1 : -1;
      const double acc = acceptance[static_cast<std::size_t>((sx * field + 4) / 2)];
      Q(r, index.at(canonical[c ^ (1U << x)])) += acc / n;
      Q(r, r) += (1.0 - acc) / n;
    }
  }
  ExactTunneling out;
  out.orbits = k;
  // mean hitting time of +1: (I - Q) h = 1 off the target
  std::vector<int> keep;
  for (int r = 0; r < k; ++r) {
    if (r != plus) keep.push_back(r);
  }
  const int m = static_cast<int>(keep.size());
  Eigen::MatrixXd A(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) A(a, b) = (a == b ? 1.0 : 0.0) - Q(keep[a], keep[b]);
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const Eigen::VectorXd h = lu.solve(Eigen::VectorXd::Ones(m));
  out.mean_steps = h(std::find(keep.begin(), keep.end(), minus) - keep.begin());
  // escape probability: harmonic off {-1, +1}
  std::vector<int> inner;
  for (int r = 0; r < k; ++r) {
    if (r != plus && r != minus) inner.push_back(r);
  }
  const int mi = static_cast<int>(inner.size());
  Eigen::MatrixXd B(mi, mi);
  Eigen::VectorXd rhs(mi);
  for (int a = 0; a < mi; ++a) {
    rhs(a) = Q(inner[a], plus);
    for (int b = 0; b < mi; ++b) B(a, b) = (a == b ? 1.0 : 0.0) - Q(inner[a], inner[b]);
  }
  const Eigen::VectorXd u = Eigen::PartialPivLU<Eigen::MatrixXd>(B).solve(rhs);
  const int one = index.at(canonical[1]);
  out.p_escape = u(std::find(inner.begin(), inner.end(), one) - inner.begin());
  return out;
}

}  // namespace pcaising
