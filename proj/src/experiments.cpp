#include "pcaising/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "pcaising/coupling.hpp"
#include "pcaising/effective.hpp"
#include "pcaising/errors.hpp"
#include "pcaising/exact.hpp"
#include "pcaising/glauber.hpp"
#include "pcaising/kernel.hpp"
#include "pcaising/random_field.hpp"
#include "pcaising/stats.hpp"

namespace pcaising {

using nlohmann::json;

const char* code_version() noexcept { return "0.1.0"; }

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "exact-verify",     "tv-theorem1",        "mixing-exact",       "coupling-bound", "stopping-times",
      "discrepancy-walk", "effective-validate", "tunneling-scaling", "glauber-compare"};
  return names;
}

// ---- config ----

void ExperimentConfig::validate() const {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), experiment) == names.end()) {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  const bool explicit_pair = J.has_value() || q.has_value();
  const bool regime_pair = k.has_value() || c.has_value();
  if (explicit_pair == regime_pair) throw ConfigError("give exactly one of (J, q) or (k, c)");
  if (explicit_pair && !(J && q)) throw ConfigError("J and q must be given together");
  if (regime_pair && !(k && c)) throw ConfigError("k and c must be given together");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (budget < 1) throw ConfigError("budget must be >= 1");
  if (sides.empty()) throw ConfigError("no lattice side L given");
  std::set<int> seen;
  for (int L : sides) {
    if (L < 2) throw ConfigError("L must be >= 2, got " + std::to_string(L));
    if (!seen.insert(L).second) throw ConfigError("L " + std::to_string(L) + " repeated");
  }
  if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
}

PcaParameters ExperimentConfig::params_for(int L) const {
  try {
    if (J && q) return PcaParameters::explicit_values(*J, *q);
    if (k && c) return PcaParameters::from_regime(Regime{*k, *c}, L);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("no parameters given");
}

json config_to_json(const ExperimentConfig& config) {
  json j;
  j["experiment"] = config.experiment;
  j["L"] = config.sides;
  auto put = [&](const char* key, const std::optional<double>& v) { j[key] = v ? json(*v) : json(nullptr); };
  put("J", config.J);
  put("q", config.q);
  put("k", config.k);
  put("c", config.c);
  j["seed"] = config.seed;
  j["trials"] = config.trials;
  j["budget"] = config.budget;
  j["out"] = config.out;
  j["format"] = config.format;
  return j;
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig base) {
  if (!j.is_object()) throw ConfigError("config must be a key-value object");
  static const std::set<std::string> known{"experiment", "L", "J", "q", "k", "c", "seed",
                                           "trials", "budget", "out", "format"};
  try {
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
      auto number = [&]() -> std::optional<double> {
        if (value.is_null()) return std::nullopt;
        if (!value.is_number()) throw ConfigError(key + " must be a number");
        return value.get<double>();
      };
      auto integer = [&]() -> std::int64_t {
        if (!value.is_number_integer()) throw ConfigError(key + " must be an integer");
        return value.get<std::int64_t>();
      };
      if (key == "experiment") {
        base.experiment = value.get<std::string>();
      } else if (key == "L") {
        base.sides.clear();
        if (value.is_array()) {
          for (const auto& v : value) {
            if (!v.is_number_integer()) throw ConfigError("L entries must be integers");
            base.sides.push_back(v.get<int>());
          }
        } else {
          base.sides.push_back(static_cast<int>(integer()));
        }
      } else if (key == "J") {
        base.J = number();
      } else if (key == "q") {
        base.q = number();
      } else if (key == "k") {
        base.k = number();
      } else if (key == "c") {
        base.c = number();
      } else if (key == "seed") {
        if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0)) {
          throw ConfigError("seed must be a non-negative integer");
        }
        base.seed = value.get<std::uint64_t>();
      } else if (key == "trials") {
        base.trials = integer();
      } else if (key == "budget") {
        base.budget = integer();
      } else if (key == "out") {
        base.out = value.get<std::string>();
      } else if (key == "format") {
        base.format = value.get<std::string>();
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return base;
}

std::uint64_t stream_seed(std::uint64_t master, int side) noexcept {
  return derive_seed(master, static_cast<std::uint64_t>(side));
}

// ---- tables ----

std::optional<std::size_t> ResultTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns.begin());
}

double ResultTable::value(std::size_t row, const std::string& name) const {
  const auto c = column(name);
  if (!c) throw std::out_of_range("no column " + name);
  const json& cell = rows.at(row).at(*c);
  return cell.is_number() ? cell.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

std::string ResultTable::to_csv() const {
  std::ostringstream out;
  for (const auto& [key, value] : metadata.items()) out << "# " << key << ": " << value.dump() << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      if (!row[i].is_null()) out << row[i].dump();
    }
    out << "\n";
  }
  return out.str();
}

std::string ResultTable::to_json_text() const {
  json j;
  j["metadata"] = metadata;
  j["columns"] = columns;
  j["rows"] = rows;
  return j.dump(1) + "\n";
}

std::string ResultTable::render(const std::string& format) const {
  if (format == "csv") return to_csv();
  if (format == "json") return to_json_text();
  throw ConfigError("format must be csv or json");
}

void ResultTable::write(const std::string& path, const std::string& format) const {
  const std::string text = render(format);
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open " + path + " for writing");
  file << text;
  if (!file) throw IoError("write to " + path + " failed");
}

ExperimentConfig config_from_output(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    const json j = json::parse(text);
    return config_from_json(j.at("metadata").at("config"));
  }
  std::istringstream in(text);
  std::string line;
  const std::string tag = "# config: ";
  while (std::getline(in, line)) {
    if (line.rfind(tag, 0) == 0) return config_from_json(json::parse(line.substr(tag.size())));
  }
  throw ConfigError("no config line in output");
}

// ---- workers ----

int worker_count() {
  if (const char* env = std::getenv("PCAISING_WORKERS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<int>(std::min(n, 1024L));
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
  if (n <= 0) return;
  const int workers = static_cast<int>(std::min<std::int64_t>(worker_count(), n));
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
json num(std::int64_t v) { return json(v); }
json num(int v) { return json(v); }

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double tv_between(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s / 2;
}

json fit_json(const std::optional<stats::LinearFit>& f) {
  if (!f) return nullptr;
  return json{{"slope", num(f->slope)}, {"intercept", num(f->intercept)}, {"r_squared", num(f->r_squared)},
              {"points", f->n}};
}

std::optional<stats::LinearFit> try_fit(const std::vector<double>& x, const std::vector<double>& y, bool loglog) {
  if (x.size() < 2) return std::nullopt;
  try {
    return loglog ? stats::loglog_fit(x, y) : stats::linear_fit(x, y);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

std::vector<double> log_of(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) out.push_back(std::log(x));
  return out;
}

struct SeedCells {
  std::uint64_t stream;
  std::int64_t first;
  std::int64_t last;
};

void add_seed_columns(std::vector<std::string>& columns) {
  columns.insert(columns.end(), {"stream_seed", "trial_first", "trial_last"});
}

void push_seed(std::vector<json>& row, const SeedCells& s) {
  row.push_back(json(s.stream));
  row.push_back(json(s.first));
  row.push_back(json(s.last));
}

// ---- preflight: everything that can be refused before computing ----

void preflight(const ExperimentConfig& config) {
  config.validate();
  const std::string& e = config.experiment;
  for (int L : config.sides) {
    const PcaParameters params = config.params_for(L);
    if (e == "exact-verify" || e == "tv-theorem1") {
      exact::require_size(L, exact::Capability::measure);
    } else if (e == "mixing-exact") {
      exact::require_size(L, exact::Capability::kernel);
    } else if (e == "discrepancy-walk") {
      if (L < 4) throw ConfigError("discrepancy-walk needs L >= 4");
      if (!params.has_window()) throw ConfigError("discrepancy-walk needs 2J > q at every L");
    } else if (e == "effective-validate") {
      if (!params.has_window()) throw ConfigError("effective-validate needs 2J > q at every L");
    }
  }
  if (!config.out.empty()) {
    const auto dir = std::filesystem::absolute(config.out).parent_path();
    if (!std::filesystem::is_directory(dir)) throw IoError("output directory " + dir.string() + " does not exist");
  }
  if (e == "tv-theorem1" && !config.k) throw ConfigError("tv-theorem1 needs a regime (k, c)");
  if (e == "glauber-compare" && config.trials > 1000) throw ConfigError("glauber-compare takes at most 1000 splitting runs");
}

// ---- experiments ----

ResultTable exact_verify(const ExperimentConfig& config) {
  ResultTable t;
  t.columns = {"L", "point", "J", "q", "stationarity_residual", "row_sum_deviation", "triple_mismatches",
               "ndl_nur_mismatches", "configurations", "tv_distance", "tv_via_f", "tv_gap"};
  add_seed_columns(t.columns);
  for (int L : config.sides) {
    const TorusGeometry g(L);
    const std::uint64_t stream = stream_seed(config.seed, L);
    const auto configs = exact::enumerate(g, exact::Capability::measure);
    int triple_bad = 0, ndl_bad = 0;
    for (const auto& s : configs) {
      triple_bad += !weak_symmetry_exponents(g, s).equal();
      const auto cs = contour_stats(g, s);
      ndl_bad += cs.n_dl != cs.n_ur;
    }
    std::vector<std::vector<json>> rows(static_cast<std::size_t>(config.trials));
    parallel_for(config.trials, [&](std::int64_t p) {
      PcaParameters params = config.params_for(L);
      if (p > 0) {
        Engine engine(derive_seed(stream, static_cast<std::uint64_t>(p)));
        const double J = 3.0 * uniform01(engine);
        params = PcaParameters::explicit_values(J, uniform01(engine));
      }
      double residual = std::numeric_limits<double>::quiet_NaN();
      double row_dev = std::numeric_limits<double>::quiet_NaN();
      const auto pi = exact::stationary_pca(params, g);
      if (L <= exact::max_side(exact::Capability::kernel)) {
        const Eigen::MatrixXd K = exact::pca_kernel(params, g);
        residual = exact::stationarity_residual(K, pi.weights);
        row_dev = exact::max_row_sum_deviation(K);
      }
      const double tv = exact::tv_distance(pi, exact::gibbs(params, g));
      const double via = exact::tv_via_f(params, g);
      auto& row = rows[static_cast<std::size_t>(p)];
      row = {num(L), num(p), num(params.J()), num(params.q()), num(residual), num(row_dev), num(triple_bad),
             num(ndl_bad), num(static_cast<std::int64_t>(configs.size())), num(tv), num(via), num(std::fabs(tv - via))};
      push_seed(row, {stream, p, p});
    });
    for (auto& r : rows) t.rows.push_back(std::move(r));
  }
  return t;
}

ResultTable tv_theorem1(const ExperimentConfig& config) {
  ResultTable t;
  t.columns = {"L", "k", "c", "J", "q", "tv_exact", "bound_shape", "ratio"};
  add_seed_columns(t.columns);
  for (int L : config.sides) {
    const auto r = exact::theorem1_report(Regime{*config.k, *config.c}, L);
    std::vector<json> row{num(L), num(r.k), num(r.c), num(r.J), num(r.q), num(r.tv_exact), num(r.bound_shape),
                          num(r.tv_exact / r.bound_shape)};
    push_seed(row, {stream_seed(config.seed, L), 0, 0});
    t.rows.push_back(std::move(row));
  }
  return t;
}

ResultTable mixing_exact(const ExperimentConfig& config) {
  ResultTable t;
  t.columns = {"L", "J", "q", "pca_steps", "pca_censored", "glauber_steps", "glauber_sweeps", "glauber_censored"};
  add_seed_columns(t.columns);
  for (int L : config.sides) {
    const TorusGeometry g(L);
    const auto params = config.params_for(L);
    const Eigen::MatrixXd P = exact::pca_kernel(params, g);
    const auto pi = exact::stationary_pca(params, g);
    const auto pca = exact::exact_mixing_time(P, pi.weights, 1.0 / std::numbers::e, config.budget);
    const Eigen::MatrixXd G(exact::glauber_kernel(params, g));
    const auto gibbs = exact::gibbs(params, g);
    const auto gl = exact::exact_mixing_time(G, gibbs.weights, 1.0 / std::numbers::e, config.budget);
    std::vector<json> row{num(L), num(params.J()), num(params.q()), num(pca.steps), num(int(pca.censored)),
                          num(gl.steps), num(static_cast<double>(gl.steps) / g.site_count()), num(int(gl.censored))};
    push_seed(row, {stream_seed(config.seed, L), 0, 0});
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<std::int64_t> time_grid(std::int64_t budget) {
  std::set<std::int64_t> grid{0};
  const int points = 24;
  for (int i = 0; i <= points; ++i) {
    grid.insert(static_cast<std::int64_t>(std::floor(std::pow(static_cast<double>(budget), double(i) / points))));
  }
  return {grid.begin(), grid.end()};
}

ResultTable coupling_bound(const ExperimentConfig& config) {
  ResultTable t;
  t.columns = {"L", "t", "exceed", "trials", "bound", "ci_low", "ci_high", "exact_tv"};
  add_seed_columns(t.columns);
  const auto grid = time_grid(config.budget);
  for (int L : config.sides) {
    const TorusGeometry g(L);
    const auto params = config.params_for(L);
    const std::uint64_t stream = stream_seed(config.seed, L);
    const auto lo = SpinConfiguration::all_minus(L);
    const auto hi = SpinConfiguration::all_plus(L);
    std::vector<StoppingTime> taus(static_cast<std::size_t>(config.trials));
    parallel_for(config.trials, [&](std::int64_t i) {
      taus[static_cast<std::size_t>(i)] =
          coupling_time(g, params, lo, hi, derive_seed(stream, static_cast<std::uint64_t>(i)), grid.back() + 1);
    });
    const auto bound = bound_from_times(taus, grid);
    std::vector<double> exact_tv(grid.size(), std::numeric_limits<double>::quiet_NaN());
    if (L <= exact::max_side(exact::Capability::kernel)) {
      const Eigen::MatrixXd P = exact::pca_kernel(params, g);
      exact_tv = exact::tv_curve(P, exact::stationary_pca(params, g).weights, grid);
    }
    for (std::size_t i = 0; i < bound.size(); ++i) {
      const auto& b = bound[i];
      std::vector<json> row{num(L), num(b.t), num(b.exceed), num(b.trials), num(b.bound), num(b.ci_low),
                            num(b.ci_high), num(exact_tv[i])};
      push_seed(row, {stream, 0, config.trials - 1});
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

void push_summary(std::vector<json>& row, const TimeSummary& s) {
  const bool ok = !s.insufficient;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  row.insert(row.end(), {num(s.n_uncensored), num(s.censor_rate), num(ok ? s.mean : nan),
                         num(ok ? s.stderr_mean : nan), num(ok ? s.q25 : nan), num(ok ? s.median : nan),
                         num(ok ? s.q75 : nan)});
}

void add_summary_columns(std::vector<std::string>& columns, const std::string& name) {
  for (const char* suffix : {"_uncensored", "_censor_rate", "_mean", "_stderr", "_q25", "_median", "_q75"}) {
    columns.push_back(name + suffix);
  }
}

ResultTable stopping_times(const ExperimentConfig& config) {
  ResultTable t;
  t.columns = {"L", "J", "q", "trials", "hazard_at_minus", "S_mean_predicted"};
  for (const char* name : {"S", "T", "R", "R_first", "T_one"}) add_summary_columns(t.columns, name);
  t.columns.insert(t.columns.end(), {"s_seen", "p_t_equals_s", "p_t_equals_s_stderr", "p_t_equals_s_predicted",
                                     "shift_disagreements", "window_disagreements"});
  add_seed_columns(t.columns);
  for (int L : config.sides) {
    const TorusGeometry g(L);
    const auto params = config.params_for(L);
    const std::uint64_t stream = stream_seed(config.seed, L);
    const auto start = SpinConfiguration::all_minus(L);
    std::vector<TrajectoryRecord> records(static_cast<std::size_t>(config.trials));
    TrialOptions options;
    options.budget = config.budget;
    // S and the first return after it; T = S is settled at step S
    options.stop_at_S = true;
    options.stop_after_rungs = 1;
    parallel_for(config.trials, [&](std::int64_t i) {
      records[static_cast<std::size_t>(i)] =
          run_trial(g, params, start, derive_seed(stream, static_cast<std::uint64_t>(i)), options);
    });
    const auto st = time_statistics(records);
    // at -1 every site is aligned: N independent atypical chances of size a
    const double hazard = atypical_hazard(g, params, start);
    const double a = local_prob(params, -1, -1, -1);
    const double n = g.site_count();
    const double none = std::exp(n * std::log1p(-a));
    const double one = n * a * std::exp((n - 1) * std::log1p(-a));
    const double p_two = (1.0 - none - one) / (1.0 - none);
    std::vector<json> row{num(L), num(params.J()), num(params.q()), num(config.trials), num(hazard),
                          num(1.0 / hazard)};
    for (const auto* s : {&st.S, &st.T, &st.R, &st.R_first, &st.T_one}) push_summary(row, *s);
    row.insert(row.end(), {num(st.s_seen), num(st.p_t_equals_s), num(st.p_t_equals_s_stderr), num(p_two),
                           num(st.shift_disagreements), num(st.window_disagreements)});
    push_seed(row, {stream, 0, config.trials - 1});
    t.rows.push_back(std::move(row));
  }
  return t;
}

ResultTable discrepancy_walk(const ExperimentConfig& config) {
  ResultTable t;
  t.columns = {"L", "J", "q", "favorable", "runs", "flips", "p_hat", "p_stderr", "p_predicted", "z_score",
               "return_mean", "return_stderr", "walk_mean_predicted", "arc_violations", "censored"};
  add_seed_columns(t.columns);
  for (int L : config.sides) {
    const TorusGeometry g(L);
    const auto params = config.params_for(L);
    const std::uint64_t stream = stream_seed(config.seed, L);
    // xi = -1 except xi_1 = +1: diagonal 0 is favorable, diagonal 2 is not
    std::vector<int> xi(static_cast<std::size_t>(L), -1);
    xi[1] = 1;
    for (int cls = 0; cls < 2; ++cls) {
      const bool fav = cls == 0;
      const int site = g.diagonal_sites(fav ? 0 : 2)[0];
      const std::int64_t offset = cls * config.trials;
      std::vector<ExcursionResult> out(static_cast<std::size_t>(config.trials));
      parallel_for(config.trials, [&](std::int64_t i) {
        out[static_cast<std::size_t>(i)] = zero_temperature_excursion(
            g, params, xi, site, derive_seed(stream, static_cast<std::uint64_t>(offset + i)), config.budget);
      });
      std::int64_t flips = 0, bad = 0, censored = 0;
      std::vector<double> returns;
      for (const auto& r : out) {
        if (r.R.censored) {
          ++censored;
          continue;
        }
        flips += r.flipped;
        bad += !r.arc_contiguous || r.max_arc_change > 1;
        returns.push_back(static_cast<double>(r.R.value));
      }
      const double runs = static_cast<double>(returns.size());
      const auto w = walk_params(params, fav);
      const double p = hit_prob(w.p_plus, w.p_minus, L, 1);
      const double p_hat = runs > 0 ? flips / runs : std::numeric_limits<double>::quiet_NaN();
      const double se_pred = std::sqrt(p * (1 - p) / runs);
      const auto rs = returns.empty() ? stats::Summary{} : stats::summarize(returns);
      std::vector<json> row{num(L), num(params.J()), num(params.q()), num(int(fav)), num(static_cast<std::int64_t>(runs)),
                            num(flips), num(p_hat), num(std::sqrt(p_hat * (1 - p_hat) / runs)), num(p),
                            num(se_pred > 0 ? (p_hat - p) / se_pred : std::numeric_limits<double>::quiet_NaN()),
                            num(rs.mean), num(rs.stderr_mean), num(expected_absorption(w.p_plus, w.p_minus, L, 1)),
                            num(bad), num(censored)};
      push_seed(row, {stream, offset, offset + config.trials - 1});
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

ResultTable effective_validate(const ExperimentConfig& config, json& results) {
  ResultTable t;
  t.columns = {"L", "J", "q", "outcome", "law", "direct", "direct_stderr", "effective", "effective_stderr",
               "unconditioned"};
  add_seed_columns(t.columns);
  results = json::object();
  for (int L : config.sides) {
    const TorusGeometry g(L);
    const auto params = config.params_for(L);
    const std::uint64_t stream = stream_seed(config.seed, L);
    const std::int64_t n = config.trials;
    const std::vector<int> minus(static_cast<std::size_t>(L), -1);
    const auto law = effective_step_law(params, minus);
    // outcome index: 0 other (-2), 1 stay (-1), 2 + m flip of m
    const std::size_t width = static_cast<std::size_t>(L) + 2;
    std::vector<int> direct(static_cast<std::size_t>(n)), eff(static_cast<std::size_t>(n)), plain(static_cast<std::size_t>(n));
    std::vector<double> s_times(static_cast<std::size_t>(n)), r_times(static_cast<std::size_t>(n));
    std::atomic<std::int64_t> censored{0};
    parallel_for(n, [&](std::int64_t i) {
      const auto k = static_cast<std::size_t>(i);
      const auto d = direct_renormalized_step(g, params, minus, derive_seed(stream, static_cast<std::uint64_t>(i)),
                                              DirectMode::conditioned, config.budget);
      if (!d.R.detected()) censored++;
      direct[k] = d.outcome + 2;
      s_times[k] = static_cast<double>(d.S.value);
      r_times[k] = static_cast<double>(d.R.value);
      Engine engine(derive_seed(stream, static_cast<std::uint64_t>(n + i)));
      auto xi = minus;
      eff[k] = effective_step(params, xi, engine) + 2;
      const auto u = direct_renormalized_step(g, params, minus, derive_seed(stream, static_cast<std::uint64_t>(2 * n + i)),
                                              DirectMode::unconditioned, config.budget);
      if (!u.R.detected()) censored++;
      plain[k] = u.outcome + 2;
    });
    std::vector<double> fd(width, 0.0), fe(width, 0.0), fu(width, 0.0), fl(width, 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      fd[static_cast<std::size_t>(direct[k])] += 1.0 / n;
      fe[static_cast<std::size_t>(eff[k])] += 1.0 / n;
      fu[static_cast<std::size_t>(plain[k])] += 1.0 / n;
    }
    fl[1] = law.stay;
    for (int m = 0; m < L; ++m) fl[static_cast<std::size_t>(m) + 2] = law.flip[static_cast<std::size_t>(m)];
    for (std::size_t o = 0; o < width; ++o) {
      std::vector<json> row{num(L), num(params.J()), num(params.q()), num(static_cast<int>(o) - 2), num(fl[o]),
                            num(fd[o]), num(std::sqrt(fd[o] * (1 - fd[o]) / n)), num(fe[o]),
                            num(std::sqrt(fe[o] * (1 - fe[o]) / n)), num(fu[o])};
      push_seed(row, {stream, 0, 3 * n - 1});
      t.rows.push_back(std::move(row));
    }
    results[std::to_string(L)] = {{"tv_direct_effective", num(tv_between(fd, fe))},
                                  {"tv_direct_law", num(tv_between(fd, fl))},
                                  {"tv_effective_law", num(tv_between(fe, fl))},
                                  {"tv_unconditioned_law", num(tv_between(fu, fl))},
                                  {"unconditioned_other_rate", num(fu[0])},
                                  {"S_mean", num(stats::summarize(s_times).mean)},
                                  {"R_mean", num(stats::summarize(r_times).mean)},
                                  {"censored", censored.load()}};
  }
  return t;
}

ResultTable tunneling_scaling(const ExperimentConfig& config, json& results) {
  ResultTable t;
  t.columns = {"L", "J", "q", "trials", "censored", "censor_rate", "mean", "stderr", "q25", "median", "q75"};
  add_seed_columns(t.columns);
  std::vector<double> xs, meds;
  for (int L : config.sides) {
    const auto params = config.params_for(L);
    const std::uint64_t stream = stream_seed(config.seed, L);
    std::vector<StoppingTime> times(static_cast<std::size_t>(config.trials));
    EffectiveRunOptions options;
    options.budget = config.budget;
    parallel_for(config.trials, [&](std::int64_t i) {
      times[static_cast<std::size_t>(i)] =
          effective_tunneling_time(params, L, derive_seed(stream, static_cast<std::uint64_t>(i)), options).time;
    });
    const auto s = summarize_times("tunneling", times);
    const bool ok = !s.insufficient && s.censor_rate < 0.05;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<json> row{num(L), num(params.J()), num(params.q()), num(config.trials),
                          num(s.n_total - s.n_uncensored), num(s.censor_rate), num(ok ? s.mean : nan),
                          num(ok ? s.stderr_mean : nan), num(ok ? s.q25 : nan), num(ok ? s.median : nan),
                          num(ok ? s.q75 : nan)};
    push_seed(row, {stream, 0, config.trials - 1});
    t.rows.push_back(std::move(row));
    if (ok && s.median > 0) {
      xs.push_back(L);
      meds.push_back(s.median);
    }
  }
  results = {{"power_fit", fit_json(try_fit(xs, meds, true))},
             {"exponential_fit", fit_json(try_fit(xs, log_of(meds), false))}};
  return t;
}

ResultTable glauber_compare(const ExperimentConfig& config, json& results) {
  constexpr int particles = 1000;
  constexpr int excursions = 20000;
  ResultTable t;
  t.columns = {"L", "J", "runs", "particles", "p_escape", "p_escape_stderr", "holding", "excursion", "mean_steps",
               "mean_sweeps", "log_mean_sweeps", "exact_mean_sweeps"};
  add_seed_columns(t.columns);
  std::vector<double> xs, sweeps;
  for (int L : config.sides) {
    const TorusGeometry g(L);
    const auto params = config.params_for(L);
    const std::uint64_t stream = stream_seed(config.seed, L);
    std::vector<TunnelingEstimate> est(static_cast<std::size_t>(config.trials));
    parallel_for(config.trials, [&](std::int64_t i) {
      est[static_cast<std::size_t>(i)] =
          glauber_tunneling_estimate(g, params, derive_seed(stream, static_cast<std::uint64_t>(i)),
                                     SplittingOptions{particles, config.budget}, excursions);
    });
    std::vector<double> p, exc;
    for (const auto& e : est) {
      p.push_back(e.p_escape);
      exc.push_back(e.excursion);
    }
    const auto ps = stats::summarize(p);
    const double holding = est.front().holding;
    const double excursion = stats::summarize(exc).mean;
    const double steps = (holding + excursion) / ps.mean;
    const double sw = steps / g.site_count();
    double exact_sweeps = std::numeric_limits<double>::quiet_NaN();
    if (L <= 4) exact_sweeps = glauber_exact_tunneling(g, params).mean_steps / g.site_count();
    std::vector<json> row{num(L), num(params.J()), num(config.trials), num(particles), num(ps.mean),
                          num(config.trials > 1 ? ps.stderr_mean : std::numeric_limits<double>::quiet_NaN()),
                          num(holding), num(excursion), num(steps), num(sw), num(std::log(sw)), num(exact_sweeps)};
    push_seed(row, {stream, 0, config.trials - 1});
    t.rows.push_back(std::move(row));
    if (std::isfinite(sw) && sw > 0) {
      xs.push_back(L);
      sweeps.push_back(sw);
    }
  }
  const auto power = try_fit(xs, sweeps, true);
  const auto expo = try_fit(xs, log_of(sweeps), false);
  json worse = nullptr;
  if (power && expo) worse = (1 - power->r_squared) >= 2 * (1 - expo->r_squared);
  results = {{"power_fit", fit_json(power)}, {"exponential_fit", fit_json(expo)},
             {"power_fit_materially_worse", worse}, {"time_unit", "sweeps"}};
  return t;
}

}  // namespace

ResultTable run(const ExperimentConfig& config) {
  preflight(config);
  const std::string& e = config.experiment;
  json results = json::object();
  ResultTable t;
  if (e == "exact-verify") t = exact_verify(config);
  else if (e == "tv-theorem1") t = tv_theorem1(config);
  else if (e == "mixing-exact") t = mixing_exact(config);
  else if (e == "coupling-bound") t = coupling_bound(config);
  else if (e == "stopping-times") t = stopping_times(config);
  else if (e == "discrepancy-walk") t = discrepancy_walk(config);
  else if (e == "effective-validate") t = effective_validate(config, results);
  else if (e == "tunneling-scaling") t = tunneling_scaling(config, results);
  else t = glauber_compare(config, results);
  t.experiment = e;
  t.metadata["experiment"] = e;
  t.metadata["version"] = code_version();
  t.metadata["timestamp"] = utc_timestamp();
  t.metadata["config"] = config_to_json(config);
  t.metadata["results"] = results;
  if (!config.out.empty()) t.write(config.out, config.format);
  return t;
}

}  // namespace pcaising
