#include <iostream>

#include <CLI11.hpp>

#include "fbic/parallel.hpp"
#include "fbic/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Floquet bound states in a driven lossy lattice"};
  app.require_subcommand(1);

  std::string config_path, out;
  int jobs = fbic::default_jobs();
  bool force = false, check = false;
  std::vector<std::string> overrides;

  for (const auto& name : fbic::scenario_commands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "scenario file (INI)")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory")->required();
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--force", force, "overwrite a non-empty output directory");
    sub->add_flag("--check", check, "verify step-size convergence by doubling first");
    sub->add_option("--set", overrides, "override, section.key=value (repeatable)");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  fbic::ScenarioConfig config;
  try {
    if (!config_path.empty()) config = fbic::load_config(config_path);
    for (const auto& assignment : overrides) fbic::apply_override(config, assignment);
  } catch (const fbic::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return fbic::exit_config;
  }

  fbic::ScenarioFlags flags;
  flags.out = out;
  flags.jobs = jobs;
  flags.force = force;
  flags.check = check;
  flags.config_path = config_path;
  flags.overrides = overrides;
  return fbic::run_scenario(command, config, flags, std::cerr);
}
