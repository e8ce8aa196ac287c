// Command-line front end over the C API.
//
//   pcaising_cli <experiment> [--L 8,16] [--J 1 --q 0.1 | --k 8 --c 0.75] [--seed N]
//                [--trials N] [--budget N] [--out file] [--format csv|json] [--config file]
//
// Values come from the defaults, then the --config JSON object, then the flags.
// Without --out the table goes to stdout. On failure a single line
//   error <category> <message>
// goes to stderr and the exit code is the pcai_status value.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pcaising/pcaising.h"

namespace {

int report(pcai_status status, const std::string& message) {
  std::string one_line = message;
  for (char& ch : one_line) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  std::cerr << "error " << pcai_status_name(status) << " " << one_line << "\n";
  return static_cast<int>(status);
}

int report_last(pcai_status status) { return report(status, pcai_last_error()); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PCA Ising experiments"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string experiment;
  std::vector<int> sides;
  std::optional<double> J, q, k, c;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> trials, budget;
  std::optional<std::string> out, format;
  std::string config_path;

  app.add_option("--experiment", experiment, "experiment name (or give it as a subcommand)");
  app.add_option("--L", sides, "lattice side, or a comma separated list")->delimiter(',');
  app.add_option("--J", J, "coupling J");
  app.add_option("--q", q, "self interaction q");
  app.add_option("--k", k, "regime constant, J = k log L");
  app.add_option("--c", c, "regime constant, q = c log L / L");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--trials", trials, "trial count");
  app.add_option("--budget", budget, "step budget");
  app.add_option("--out", out, "output file (stdout when absent)");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--config", config_path, "JSON key-value file; flags take precedence");

  const char* names[] = {"exact-verify",     "tv-theorem1",        "mixing-exact",      "coupling-bound",
                         "stopping-times",   "discrepancy-walk",   "effective-validate", "tunneling-scaling",
                         "glauber-compare"};
  for (const char* name : names) app.add_subcommand(name, std::string("run ") + name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(PCAI_INVALID_ARGUMENT, e.what());
  }

  const auto chosen = app.get_subcommands();
  if (!chosen.empty()) {
    if (!experiment.empty() && experiment != chosen.front()->get_name()) {
      return report(PCAI_INVALID_ARGUMENT, "subcommand and --experiment disagree");
    }
    experiment = chosen.front()->get_name();
  }

  pcai_config* config = nullptr;
  if (pcai_config_create(&config) != PCAI_OK) return report_last(PCAI_INTERNAL);
  struct Guard {
    pcai_config* c;
    ~Guard() { pcai_config_destroy(c); }
  } guard{config};

  if (!config_path.empty()) {
    std::ifstream file(config_path);
    if (!file) return report(PCAI_IO, "cannot read config file " + config_path);
    std::stringstream text;
    text << file.rdbuf();
    if (const auto s = pcai_config_merge_json(config, text.str().c_str()); s != PCAI_OK) return report_last(s);
  }

  nlohmann::json flags = nlohmann::json::object();
  if (!experiment.empty()) flags["experiment"] = experiment;
  if (!sides.empty()) flags["L"] = sides;
  // a parameter pair on the command line replaces the other pair from the file
  if (J || q) {
    flags["k"] = nullptr;
    flags["c"] = nullptr;
  }
  if (k || c) {
    flags["J"] = nullptr;
    flags["q"] = nullptr;
  }
  if (J) flags["J"] = *J;
  if (q) flags["q"] = *q;
  if (k) flags["k"] = *k;
  if (c) flags["c"] = *c;
  if (seed) flags["seed"] = *seed;
  if (trials) flags["trials"] = *trials;
  if (budget) flags["budget"] = *budget;
  if (out) flags["out"] = *out;
  if (format) flags["format"] = *format;
  if (const auto s = pcai_config_merge_json(config, flags.dump().c_str()); s != PCAI_OK) return report_last(s);

  pcai_table* table = nullptr;
  if (const auto s = pcai_run(config, &table); s != PCAI_OK) return report_last(s);

  int code = 0;
  char* config_text = nullptr;
  if (const auto s = pcai_config_to_json(config, &config_text); s != PCAI_OK) {
    code = report_last(s);
  } else {
    const auto parsed = nlohmann::json::parse(config_text);
    pcai_string_free(config_text);
    if (parsed.at("out").get<std::string>().empty()) {
      char* text = nullptr;
      const auto s = pcai_table_render(table, parsed.at("format").get<std::string>().c_str(), &text);
      if (s != PCAI_OK) {
        code = report_last(s);
      } else {
        std::fputs(text, stdout);
        pcai_string_free(text);
      }
    }
  }
  pcai_table_destroy(table);
  return code;
}
