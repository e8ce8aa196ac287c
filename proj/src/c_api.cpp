#include "pcaising/pcaising.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <limits>
#include <new>
#include <string>

#include "pcaising/effective.hpp"
#include "pcaising/errors.hpp"
#include "pcaising/exact.hpp"
#include "pcaising/experiments.hpp"

struct pcai_config {
  pcaising::ExperimentConfig config;
};

struct pcai_table {
  pcaising::ResultTable table;
};

namespace {

thread_local std::string last_error;

pcai_status fail(pcai_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <class F>
pcai_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return PCAI_OK;
  } catch (const pcaising::SizeGuardError& e) {
    return fail(PCAI_SIZE_GUARD, e.what());
  } catch (const pcaising::IoError& e) {
    return fail(PCAI_IO, e.what());
  } catch (const pcaising::ConfigError& e) {
    const std::string what = e.what();
    const bool unknown = what.rfind("unknown experiment", 0) == 0;
    return fail(unknown ? PCAI_UNKNOWN_EXPERIMENT : PCAI_INVALID_ARGUMENT, what);
  } catch (const nlohmann::json::exception& e) {
    return fail(PCAI_INVALID_ARGUMENT, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(PCAI_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(PCAI_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(PCAI_INTERNAL, e.what());
  } catch (...) {
    return fail(PCAI_INTERNAL, "unknown failure");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

#define PCAI_REQUIRE(ptr)                                                     \
  do {                                                                        \
    if (!(ptr)) return fail(PCAI_INVALID_ARGUMENT, #ptr " must not be null"); \
  } while (0)

}  // namespace

extern "C" {

const char* pcai_status_name(pcai_status status) {
  switch (status) {
    case PCAI_OK: return "ok";
    case PCAI_INVALID_ARGUMENT: return "invalid_argument";
    case PCAI_UNKNOWN_EXPERIMENT: return "unknown_experiment";
    case PCAI_SIZE_GUARD: return "size_guard";
    case PCAI_IO: return "io";
    case PCAI_INTERNAL: return "internal";
  }
  return "internal";
}

const char* pcai_last_error(void) { return last_error.c_str(); }

const char* pcai_version(void) { return pcaising::code_version(); }

pcai_status pcai_config_create(pcai_config** out) {
  PCAI_REQUIRE(out);
  return guarded([&] { *out = new pcai_config{}; });
}

void pcai_config_destroy(pcai_config* config) { delete config; }

pcai_status pcai_config_set_experiment(pcai_config* config, const char* name) {
  PCAI_REQUIRE(config);
  PCAI_REQUIRE(name);
  return guarded([&] { config->config.experiment = name; });
}

pcai_status pcai_config_set_sides(pcai_config* config, const int* sides, size_t count) {
  PCAI_REQUIRE(config);
  if (count > 0) PCAI_REQUIRE(sides);
  return guarded([&] { config->config.sides.assign(sides, sides + count); });
}

pcai_status pcai_config_set_coupling(pcai_config* config, double J, double q) {
  PCAI_REQUIRE(config);
  return guarded([&] {
    auto& c = config->config;
    c.J = J;
    c.q = q;
    c.k.reset();
    c.c.reset();
  });
}

pcai_status pcai_config_set_regime(pcai_config* config, double k, double c_value) {
  PCAI_REQUIRE(config);
  return guarded([&] {
    auto& c = config->config;
    c.k = k;
    c.c = c_value;
    c.J.reset();
    c.q.reset();
  });
}

pcai_status pcai_config_set_seed(pcai_config* config, uint64_t seed) {
  PCAI_REQUIRE(config);
  config->config.seed = seed;
  last_error.clear();
  return PCAI_OK;
}

pcai_status pcai_config_set_trials(pcai_config* config, int64_t trials) {
  PCAI_REQUIRE(config);
  if (trials < 1) return fail(PCAI_INVALID_ARGUMENT, "trials must be >= 1");
  config->config.trials = trials;
  last_error.clear();
  return PCAI_OK;
}

pcai_status pcai_config_set_budget(pcai_config* config, int64_t budget) {
  PCAI_REQUIRE(config);
  if (budget < 1) return fail(PCAI_INVALID_ARGUMENT, "budget must be >= 1");
  config->config.budget = budget;
  last_error.clear();
  return PCAI_OK;
}

pcai_status pcai_config_set_output(pcai_config* config, const char* path, const char* format) {
  PCAI_REQUIRE(config);
  PCAI_REQUIRE(format);
  const std::string f = format;
  if (f != "csv" && f != "json") return fail(PCAI_INVALID_ARGUMENT, "format must be csv or json");
  return guarded([&] {
    config->config.out = path ? path : "";
    config->config.format = f;
  });
}

pcai_status pcai_config_merge_json(pcai_config* config, const char* json_text) {
  PCAI_REQUIRE(config);
  PCAI_REQUIRE(json_text);
  return guarded([&] {
    config->config = pcaising::config_from_json(nlohmann::json::parse(json_text), config->config);
  });
}

pcai_status pcai_config_to_json(const pcai_config* config, char** out) {
  PCAI_REQUIRE(config);
  PCAI_REQUIRE(out);
  return guarded([&] { *out = copy_string(pcaising::config_to_json(config->config).dump()); });
}

pcai_status pcai_config_validate(const pcai_config* config) {
  PCAI_REQUIRE(config);
  return guarded([&] { config->config.validate(); });
}

pcai_status pcai_run(const pcai_config* config, pcai_table** out) {
  PCAI_REQUIRE(config);
  PCAI_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new pcai_table{pcaising::run(config->config)}; });
}

void pcai_table_destroy(pcai_table* table) { delete table; }

size_t pcai_table_rows(const pcai_table* table) { return table ? table->table.rows.size() : 0; }

size_t pcai_table_columns(const pcai_table* table) { return table ? table->table.columns.size() : 0; }

const char* pcai_table_column_name(const pcai_table* table, size_t column) {
  if (!table || column >= table->table.columns.size()) return nullptr;
  return table->table.columns[column].c_str();
}

pcai_status pcai_table_value(const pcai_table* table, size_t row, size_t column, double* out) {
  PCAI_REQUIRE(table);
  PCAI_REQUIRE(out);
  const auto& t = table->table;
  if (row >= t.rows.size() || column >= t.columns.size()) return fail(PCAI_INVALID_ARGUMENT, "cell out of range");
  const auto& cell = t.rows[row][column];
  *out = cell.is_number() ? cell.get<double>() : std::numeric_limits<double>::quiet_NaN();
  last_error.clear();
  return PCAI_OK;
}

pcai_status pcai_table_render(const pcai_table* table, const char* format, char** out) {
  PCAI_REQUIRE(table);
  PCAI_REQUIRE(format);
  PCAI_REQUIRE(out);
  return guarded([&] { *out = copy_string(table->table.render(format)); });
}

pcai_status pcai_table_write(const pcai_table* table, const char* path, const char* format) {
  PCAI_REQUIRE(table);
  PCAI_REQUIRE(path);
  PCAI_REQUIRE(format);
  return guarded([&] { table->table.write(path, format); });
}

void pcai_string_free(char* text) { std::free(text); }

pcai_status pcai_hit_prob(double p_plus, double p_minus, int L, int start, double* out) {
  PCAI_REQUIRE(out);
  return guarded([&] { *out = pcaising::hit_prob(p_plus, p_minus, L, start); });
}

pcai_status pcai_expected_absorption(double p_plus, double p_minus, int L, int start, double* out) {
  PCAI_REQUIRE(out);
  return guarded([&] { *out = pcaising::expected_absorption(p_plus, p_minus, L, start); });
}

pcai_status pcai_exact_tv(int L, double J, double q, double* out) {
  PCAI_REQUIRE(out);
  return guarded([&] {
    pcaising::exact::require_size(L, pcaising::exact::Capability::measure);
    const pcaising::TorusGeometry g(L);
    const auto params = pcaising::PcaParameters::explicit_values(J, q);
    *out = pcaising::exact::tv_distance(pcaising::exact::stationary_pca(params, g),
                                        pcaising::exact::gibbs(params, g));
  });
}

}  // extern "C"
