#pragma once

#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rydchain/config.hpp"
#include "rydchain/scenarios.hpp"

namespace rydchain {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

/// Checks everything that can be checked without simulating: the scenario
/// exists, parameters are physical, grids are well formed and the ε source
/// loads. Throws ConfigError, DataError or IoError.
void validate_run_config(const RunConfig& config);

/// validate_run_config followed by the scenario itself.
ScenarioResult execute(const RunConfig& config);

nlohmann::ordered_json summary_document(const ScenarioResult& result, const RunConfig& config);
/// Loadable config of the run plus the library version.
nlohmann::ordered_json provenance_document(const RunConfig& config);

/// Writes tables (csv format), summary.json (json format) and always
/// provenance.json into config.output_dir. Returns the files written.
std::vector<std::filesystem::path> write_outputs(const ScenarioResult& result, const RunConfig& config);

/// Exit status for an exception thrown by the steps above.
int exit_code_for(std::exception_ptr error);

std::string version();

}  // namespace rydchain
