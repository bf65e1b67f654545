// Command-line front end: run scenarios, list them, validate configs.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rydchain/config.hpp"
#include "rydchain/errors.hpp"
#include "rydchain/runner.hpp"
#include "rydchain/scenarios.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace rydchain;

struct RunFlags {
  std::string scenario;
  std::string config_path;
  std::vector<std::string> assignments;
  bool ideal = false;
  std::string range;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> realizations;
};

// Precedence: flags > environment > config file > defaults.
RunConfig resolve(const RunFlags& flags) {
  json doc = json::object();
  if (!flags.config_path.empty()) {
    doc = load_config_file(flags.config_path);
    check_known_keys(doc);
  }
  if (const char* dir = std::getenv("RYDCHAIN_OUTPUT_DIR"); dir && *dir) doc["output"]["dir"] = dir;
  if (const char* workers = std::getenv("RYDCHAIN_WORKERS"); workers && *workers) {
    try {
      doc["workers"] = std::stoull(workers);
    } catch (const std::exception&) {
      throw ConfigError(std::string("RYDCHAIN_WORKERS: not a number: ") + workers);
    }
  }
  if (!flags.scenario.empty()) doc["scenario"] = flags.scenario;
  for (const auto& a : flags.assignments) apply_assignment(doc, a);
  if (flags.ideal) doc["options"]["ideal"] = true;
  if (!flags.range.empty()) doc["options"]["range_mode"] = flags.range;
  if (flags.seed) doc["seed"] = *flags.seed;
  if (!flags.out.empty()) doc["output"]["dir"] = flags.out;
  if (flags.workers) doc["workers"] = *flags.workers;
  if (flags.realizations) doc["options"]["n_realizations"] = *flags.realizations;
  return parse_config(doc);
}

int report(std::exception_ptr error) {
  try {
    std::rethrow_exception(error);
  } catch (const std::exception& e) {
    std::cerr << "rydchain: " << e.what() << '\n';
  } catch (...) {
    std::cerr << "rydchain: unknown error\n";
  }
  return exit_code_for(error);
}

int run(const RunFlags& flags) {
  try {
    const RunConfig config = resolve(flags);
    const ScenarioResult result = execute(config);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& f : write_outputs(result, config)) std::cout << f.string() << '\n';
    return kExitOk;
  } catch (...) {
    return report(std::current_exception());
  }
}

int list_scenarios(bool as_json) {
  if (as_json) {
    json out = json::array();
    for (const auto& s : scenario_catalog()) {
      out.push_back(json{{"name", s.name}, {"anchor", s.anchor}, {"description", s.description},
                         {"parameters", s.parameters}});
    }
    std::cout << out.dump(2) << '\n';
    return kExitOk;
  }
  for (const auto& s : scenario_catalog()) {
    std::cout << s.name << "  [" << s.anchor << "]\n    " << s.description << "\n    options:";
    for (const auto& p : s.parameters) std::cout << ' ' << p;
    std::cout << '\n';
  }
  return kExitOk;
}

int validate_config(const std::string& path, bool print_resolved) {
  try {
    RunFlags flags;
    flags.config_path = path;
    const RunConfig config = resolve(flags);
    validate_run_config(config);
    if (print_resolved) std::cout << to_json(config).dump(2) << '\n';
    std::cout << path << ": ok\n";
    return kExitOk;
  } catch (...) {
    return report(std::current_exception());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rydberg spin-chain simulator"};
  app.set_version_flag("--version", rydchain::version());
  app.require_subcommand(1);

  RunFlags flags;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario and write its tables, summary and provenance");
  run_cmd->add_option("scenario", flags.scenario, "Scenario name (see list-scenarios)");
  run_cmd->add_option("-c,--config", flags.config_path, "JSON config file (comments allowed)");
  run_cmd->add_option("-s,--set", flags.assignments, "Override a config key, e.g. options.distance=40");
  run_cmd->add_flag("--ideal", flags.ideal, "Ideal limit: perfect pulses, no damping, T = 0, no loss");
  run_cmd->add_option("--range", flags.range, "Coupling range: full or nearest_neighbor");
  run_cmd->add_option("--seed", flags.seed, "Master seed");
  run_cmd->add_option("-o,--out", flags.out, "Output directory");
  run_cmd->add_option("-j,--workers", flags.workers, "Worker threads for Monte-Carlo realizations");
  run_cmd->add_option("-n,--realizations", flags.realizations, "Thermal realizations per curve");

  bool list_json = false;
  auto* list_cmd = app.add_subcommand("list-scenarios", "List scenarios with their figure anchors");
  list_cmd->add_flag("--json", list_json, "Machine-readable output");

  std::string validate_path;
  bool print_resolved = false;
  auto* validate_cmd = app.add_subcommand("validate-config", "Check a config file without running it");
  validate_cmd->add_option("config", validate_path, "Config file")->required();
  validate_cmd->add_flag("--print", print_resolved, "Print the resolved config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (*run_cmd) return run(flags);
  if (*list_cmd) return list_scenarios(list_json);
  if (*validate_cmd) return validate_config(validate_path, print_resolved);
  return kExitConfig;
}
