#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rydchain/scenarios.hpp"

namespace rydchain {

/// A fully resolved run: scenario, options and where to write results.
struct RunConfig {
  std::string scenario;
  ScenarioOptions options;
  std::filesystem::path output_dir = "rydchain-out";
  std::vector<std::string> formats{"csv", "json"};
};

/// Every accepted key with its default value. Keys whose default is null
/// are optional.
nlohmann::ordered_json default_config_json();

/// JSON with // and /* */ comments. Throws ConfigError on syntax errors and
/// IoError if the file cannot be read.
nlohmann::ordered_json load_config_file(const std::filesystem::path& path);

/// Throws ConfigError naming the JSON pointer of the first key that is not
/// part of the schema.
void check_known_keys(const nlohmann::ordered_json& doc);

/// Recursive merge: objects merge key by key, anything else replaces.
void overlay(nlohmann::ordered_json& base, const nlohmann::ordered_json& patch);

/// Applies "a.b.c=value". The value is parsed as JSON when possible and
/// kept as a string otherwise.
void apply_assignment(nlohmann::ordered_json& doc, const std::string& assignment);

/// Strict conversion; type and range errors name the offending pointer.
RunConfig parse_config(const nlohmann::ordered_json& doc);

/// Inverse of parse_config. With `for_provenance`, machine-specific keys
/// (worker count, output directory) are left out so that reruns compare
/// byte for byte.
nlohmann::ordered_json to_json(const RunConfig& config, bool for_provenance = false);

}  // namespace rydchain
