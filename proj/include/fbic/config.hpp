#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbic/experiments.hpp"

namespace fbic {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class InitialState { dark_bic, packet, site };

struct RunSettings {
  int steps_per_period = 2048;
  int samples_per_period = 1;
  Frame frame = Frame::rotating;
  double growth_tolerance = 1e-6;

  double ipr_threshold = 0.1;
  double dark_tol = 0;  // 0 selects 1e-3 * omega
  double pop_tol = 1e-2;
  double band_margin = 0.05;
  double band_margin_abs = 0;

  double periods = 8;
  InitialState initial = InitialState::dark_bic;
  int initial_site = 0;
  PacketSpec packet;

  std::vector<double> gamma_norm_grid;
  std::vector<double> gamma_grid;
  std::vector<double> omega_grid;
  std::vector<double> u_grid;
  std::vector<int> modes_grid;

  DecayVariable decay_variable = DecayVariable::gamma;
  std::optional<double> probe_time;
  double probe_periods = 8;
  bool retune_to_beta_root = false;

  int truncation = 20;
  double check_tolerance = 1e-6;
};

struct OutputSettings {
  bool profiles = true;
  bool trajectories = true;
};

struct ScenarioConfig {
  ModelSpec model;
  RunSettings run;
  OutputSettings output;

  AnalyzeOptions<double> analyze_options(int jobs = 1) const;
  EvolveOptions<double> evolve_options() const;
  RunOptions run_options(int jobs) const;
};

/// Parses the INI-style scenario format. `source` names the input in errors.
ScenarioConfig parse_config(const std::string& text, const std::string& source = "<config>");
ScenarioConfig load_config(const std::string& path);

/// Applies one `section.key=value` override.
void apply_override(ScenarioConfig& config, const std::string& assignment);

/// Every key with its current value, in a form parse_config reads back unchanged.
std::string to_ini(const ScenarioConfig& config);

/// Checks that the grids a subcommand needs are present and sane.
void validate_for(const ScenarioConfig& config, const std::string& command);

/// Grid syntax: "a, b, c", "linspace(a, b, n)" or "geomspace(a, b, n)".
std::vector<double> parse_grid(const std::string& text);

}  // namespace fbic
