#include "rydchain/runner.hpp"

#include <fstream>

#include "rydchain/errors.hpp"
#include "rydchain/thermal.hpp"

namespace rydchain {

using json = nlohmann::ordered_json;

std::string version() { return RYDCHAIN_VERSION; }

void validate_run_config(const RunConfig& config) {
  if (config.scenario.empty()) throw ConfigError("/scenario: no scenario selected");
  scenario_info(config.scenario);
  const auto& o = config.options;
  if (o.tau) o.tau->values();
  o.calibration_grid.values();

  const auto geometry = ChainGeometry::linear(2, o.spacing, o.theta);
  for (const auto& d : validate(geometry, o.params)) {
    if (d.kind == DiagnosticKind::non_physical_rate || d.kind == DiagnosticKind::size_mismatch)
      throw ConfigError("/params: " + d.message);
  }
  if (o.epsilon.backend != EpsilonModel::Backend::recapture_mc) o.epsilon.build(o.params);
}

ScenarioResult execute(const RunConfig& config) {
  validate_run_config(config);
  return run_scenario(config.scenario, config.options);
}

json summary_document(const ScenarioResult& result, const RunConfig& config) {
  json doc;
  doc["scenario"] = result.scenario;
  doc["version"] = version();
  doc["seed"] = config.options.seed;
  json tables = json::array();
  for (const auto& t : result.tables) tables.push_back(t.name + ".csv");
  doc["tables"] = tables;
  doc["results"] = result.summary;
  doc["warnings"] = result.warnings;
  return doc;
}

json provenance_document(const RunConfig& config) {
  json doc;
  doc["provenance"] = json{{"version", version()}};
  overlay(doc, to_json(config, true));
  return doc;
}

namespace {

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

bool wants(const RunConfig& config, const std::string& format) {
  for (const auto& f : config.formats) {
    if (f == format) return true;
  }
  return false;
}

}  // namespace

std::vector<std::filesystem::path> write_outputs(const ScenarioResult& result, const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create " + config.output_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> files;
  if (wants(config, "csv")) {
    for (const auto& table : result.tables) {
      files.push_back(config.output_dir / (table.name + ".csv"));
      write_csv(files.back(), table);
    }
  }
  if (wants(config, "json")) {
    files.push_back(config.output_dir / "summary.json");
    write_json(files.back(), summary_document(result, config));
  }
  files.push_back(config.output_dir / "provenance.json");
  write_json(files.back(), provenance_document(config));
  return files;
}

int exit_code_for(std::exception_ptr error) {
  try {
    std::rethrow_exception(error);
  } catch (const RealizationError& e) {
    return e.cause() ? exit_code_for(e.cause()) : kExitNumerical;
  } catch (const ConfigError&) {
    return kExitConfig;
  } catch (const SingularGeometryError&) {
    return kExitConfig;
  } catch (const DataError&) {
    return kExitConfig;
  } catch (const nlohmann::json::exception&) {
    return kExitConfig;
  } catch (const IoError&) {
    return kExitIo;
  } catch (const std::filesystem::filesystem_error&) {
    return kExitIo;
  } catch (const std::ios_base::failure&) {
    return kExitIo;
  } catch (...) {
    return kExitNumerical;
  }
}

}  // namespace rydchain
