#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fbic/config.hpp"

namespace fbic {

struct ScenarioFlags {
  std::filesystem::path out;
  int jobs = 1;
  bool force = false;
  /// Run the step-doubling verification before the main computation.
  bool check = false;
  std::string config_path;
  std::vector<std::string> overrides;
};

/// Exit codes of run_scenario.
enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_config = 2, exit_numerical = 3 };

const std::vector<std::string>& scenario_commands();

/// Runs one subcommand and writes its artifacts plus manifest.json and
/// config.resolved.cfg into flags.out. Errors are reported on `log`.
int run_scenario(const std::string& command, const ScenarioConfig& config, const ScenarioFlags& flags,
                 std::ostream& log);

}  // namespace fbic
