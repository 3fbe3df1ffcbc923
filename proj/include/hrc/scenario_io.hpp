#pragma once

// Scenario and parameter files on disk.

#include <filesystem>
#include <string>

#include "hrc/planner.hpp"

namespace hrc {

/// The named file does not exist or cannot be opened.
class FileMissing : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

/// Either a full scenario object or {"study_pattern": "A"} for one of the
/// built-in study layouts (other keys then override it).
ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig scenario_from_file_json(const Json& j);

/// Overrides on top of `base`; sections cost, estimator, schedule, planner.
PlannerParams load_params(const std::filesystem::path& path, PlannerParams base);

}  // namespace hrc
