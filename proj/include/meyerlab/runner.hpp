#pragma once

// Config-driven experiment runs that write CSV artifacts and a manifest.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace meyerlab {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
  std::filesystem::path scheme_path;
  std::string experiment;
  nlohmann::json params;
  std::filesystem::path output_dir;
  nlohmann::json raw;  // the parsed file, echoed into the manifest
};

/// Keys: scheme, experiment, params, output_dir. Relative scheme paths are
/// taken from base_dir. Throws ConfigError naming the offending key.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunReport {
  std::vector<std::filesystem::path> artifacts;
  std::vector<Assertion> assertions;
  double wall_seconds = 0.0;
  bool pass() const;
};

/// Runs the experiment and writes its artifacts plus manifest.json into
/// output_dir.
RunReport run(const ExperimentConfig& config);

/// Scheme diagnostics as JSON.
nlohmann::json validate_scheme(const std::filesystem::path& path);

}  // namespace meyerlab
