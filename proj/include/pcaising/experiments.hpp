#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pcaising/parameters.hpp"

namespace pcaising {

const char* code_version() noexcept;

/// Names accepted by run(), in a fixed order.
const std::vector<std::string>& experiment_names();

struct ExperimentConfig {
  std::string experiment;
  std::vector<int> sides;
  std::optional<double> J;
  std::optional<double> q;
  std::optional<double> k;
  std::optional<double> c;
  std::uint64_t seed = 1;
  std::int64_t trials = 100;
  std::int64_t budget = 100000;
  std::string out;
  std::string format = "csv";

  /// Throws ConfigError on a broken config (unknown name, both or neither of
  /// (J, q) and (k, c), trials or budget < 1, no side, unknown format).
  void validate() const;
  /// J, q at side L, either explicit or from the regime.
  PcaParameters params_for(int L) const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

nlohmann::json config_to_json(const ExperimentConfig& config);
/// Keys present in `j` override `base`; unknown keys are an error. "L" may be
/// an integer or a list of integers.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});

/// Seed of trial `trial` at side L: derive_seed(derive_seed(master, L), trial).
std::uint64_t stream_seed(std::uint64_t master, int side) noexcept;

/// Rows of named numeric columns; a null cell is a value that does not apply.
/// metadata holds experiment, version, timestamp, config, and experiment
/// level results such as fits.
struct ResultTable {
  std::string experiment;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;

  std::optional<std::size_t> column(const std::string& name) const;
  /// NaN for null cells.
  double value(std::size_t row, const std::string& name) const;

  /// '#'-prefixed metadata lines (one JSON value each), a header row, then the records.
  std::string to_csv() const;
  std::string to_json_text() const;
  std::string render(const std::string& format) const;
  void write(const std::string& path, const std::string& format) const;
};

/// Rebuilds the config echoed in the metadata of CSV or JSON output.
ExperimentConfig config_from_output(const std::string& text);

/// PCAISING_WORKERS when set to a positive integer, else one per processor.
int worker_count();
/// Calls fn(i) for i in [0, n) on the worker pool; the first exception is rethrown.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

/// Validates, refuses bad combinations before computing, runs, and writes
/// the table to config.out when it is non-empty.
ResultTable run(const ExperimentConfig& config);

}  // namespace pcaising
