#include <cmath>
#include <cstdlib>
#include <sstream>

#include "doctest.h"
#include "pcaising/errors.hpp"
#include "pcaising/experiments.hpp"

using namespace pcaising;

namespace {

ExperimentConfig base(const std::string& name, std::vector<int> sides) {
  ExperimentConfig c;
  c.experiment = name;
  c.sides = std::move(sides);
  c.J = 1.0;
  c.q = 0.2;
  c.trials = 4;
  c.budget = 200;
  return c;
}

std::string without_timestamp(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# timestamp", 0) == 0) continue;
    out << line << "\n";
  }
  return out.str();
}

}  // namespace

TEST_CASE("config validation and refusals") {
  auto ok = base("exact-verify", {2});
  CHECK_NOTHROW(ok.validate());

  auto both = ok;
  both.k = 8;
  both.c = 0.75;
  CHECK_THROWS_AS(both.validate(), ConfigError);
  auto half = ok;
  half.q.reset();
  CHECK_THROWS_AS(half.validate(), ConfigError);
  auto none = ok;
  none.J.reset();
  none.q.reset();
  CHECK_THROWS_AS(none.validate(), ConfigError);
  auto zero = ok;
  zero.trials = 0;
  CHECK_THROWS_AS(zero.validate(), ConfigError);
  zero = ok;
  zero.budget = 0;
  CHECK_THROWS_AS(zero.validate(), ConfigError);
  auto repeated = base("tunneling-scaling", {8, 8});
  CHECK_THROWS_AS(repeated.validate(), ConfigError);
  auto unknown = ok;
  unknown.experiment = "nope";
  CHECK_THROWS_AS(run(unknown), ConfigError);

  CHECK_THROWS_AS(run(base("exact-verify", {2, 5})), SizeGuardError);
  CHECK_THROWS_AS(run(base("mixing-exact", {4})), SizeGuardError);
  CHECK_THROWS_AS(run(base("tv-theorem1", {2})), ConfigError);
  CHECK_THROWS_AS(run(base("discrepancy-walk", {3})), ConfigError);
  auto negative = base("stopping-times", {4});
  negative.q = -0.5;
  CHECK_THROWS_AS(run(negative), ConfigError);
}

TEST_CASE("config json round trip") {
  auto c = base("coupling-bound", {3, 5});
  c.seed = 0xFFFFFFFFFFFFFFF1ULL;
  c.J = 0.1 + 0.2;
  c.out = "x.csv";
  CHECK(config_from_json(config_to_json(c)) == c);

  auto overridden = config_from_json(nlohmann::json{{"L", 7}, {"trials", 9}}, c);
  CHECK(overridden.sides == std::vector<int>{7});
  CHECK(overridden.trials == 9);
  CHECK(overridden.J == c.J);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"trials", "many"}}), ConfigError);
}

TEST_CASE("exact-verify at L = 2") {
  auto c = base("exact-verify", {2});
  const auto t = run(c);
  REQUIRE(t.rows.size() == 4);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    CHECK(t.value(r, "stationarity_residual") <= 1e-12);
    CHECK(t.value(r, "triple_mismatches") == 0);
    CHECK(t.value(r, "ndl_nur_mismatches") == 0);
    CHECK(t.value(r, "configurations") == 16);
    CHECK(t.value(r, "tv_gap") <= 1e-12);
    CHECK(t.value(r, "point") == double(r));
  }
  CHECK(t.value(0, "J") == 1.0);
  CHECK(t.value(0, "q") == 0.2);
}

TEST_CASE("output is deterministic and the config echo is lossless") {
  for (const char* name : {"coupling-bound", "stopping-times", "tunneling-scaling", "discrepancy-walk"}) {
    auto c = base(name, {4, 6});
    c.J = 1.5;
    c.seed = 99;
    const auto a = run(c);
    const auto b = run(c);
    CHECK(a.rows == b.rows);
    CHECK(without_timestamp(a.to_csv()) == without_timestamp(b.to_csv()));
    CHECK(config_from_output(a.to_csv()) == c);
    CHECK(config_from_output(a.to_json_text()) == c);

    // both formats carry the same cells
    const auto j = nlohmann::json::parse(a.to_json_text());
    CHECK(j.at("rows") == nlohmann::json(a.rows));
    std::istringstream in(a.to_csv());
    std::string line;
    std::size_t data = 0;
    bool header = false;
    while (std::getline(in, line)) {
      if (line.rfind("#", 0) == 0) continue;
      if (!header) {
        header = true;
        continue;
      }
      std::istringstream cells(line);
      std::string cell;
      std::size_t col = 0;
      while (std::getline(cells, cell, ',')) {
        const auto& v = a.rows[data][col++];
        if (cell.empty()) {
          CHECK(v.is_null());
        } else {
          CHECK(nlohmann::json::parse(cell) == v);
        }
      }
      ++data;
    }
    CHECK(data == a.rows.size());
  }
}

TEST_CASE("worker count does not change results") {
  auto c = base("tunneling-scaling", {4, 8});
  c.trials = 40;
  c.budget = 1'000'000;
  ::setenv("PCAISING_WORKERS", "1", 1);
  CHECK(worker_count() == 1);
  const auto one = run(c);
  ::setenv("PCAISING_WORKERS", "3", 1);
  CHECK(worker_count() == 3);
  const auto three = run(c);
  ::unsetenv("PCAISING_WORKERS");
  CHECK(one.rows == three.rows);
  CHECK(one.rows.size() == 2);
  CHECK(one.value(0, "L") == 4);
  CHECK(one.value(1, "L") == 8);
  CHECK(one.value(1, "median") > one.value(0, "median"));
  CHECK(one.metadata["results"]["power_fit"]["points"] == 2);

  std::vector<int> hit(100, 0);
  parallel_for(100, [&](std::int64_t i) { hit[static_cast<std::size_t>(i)]++; });
  for (int h : hit) CHECK(h == 1);
  CHECK_THROWS(parallel_for(10, [](std::int64_t i) {
    if (i == 7) throw std::runtime_error("boom");
  }));
}

TEST_CASE("coupling bound rows dominate the exact curve at L = 3") {
  auto c = base("coupling-bound", {3});
  c.J = 1.2;
  c.q = 0.1;
  c.trials = 300;
  c.budget = 2000;
  const auto t = run(c);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    CHECK(t.value(r, "ci_high") >= t.value(r, "exact_tv"));
  }
  CHECK(t.value(0, "t") == 0);
  CHECK(t.value(0, "bound") == 1.0);
}

TEST_CASE("tv-theorem1 and mixing-exact rows") {
  ExperimentConfig c;
  c.experiment = "tv-theorem1";
  c.sides = {2, 3};
  c.k = 1.0;
  c.c = 0.5;
  const auto t = run(c);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.value(1, "J") == doctest::Approx(std::log(3.0)));
  CHECK(t.value(1, "tv_exact") > 0);

  auto m = base("mixing-exact", {2});
  m.budget = 100000;
  const auto mt = run(m);
  CHECK(mt.value(0, "pca_steps") >= 1);
  CHECK(mt.value(0, "glauber_sweeps") == mt.value(0, "glauber_steps") / 4);
}
