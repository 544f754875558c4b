#include "fbic/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "fbic/hfe.hpp"
#include "fbic/io.hpp"

#ifndef FBIC_VERSION
#define FBIC_VERSION "unknown"
#endif

namespace fbic {

namespace {

using nlohmann::ordered_json;

ordered_json complex_json(const Complex<double>& z) { return ordered_json::array({z.real(), z.imag()}); }

ordered_json config_json(const ScenarioConfig& config) {
  ordered_json out = ordered_json::object();
  std::istringstream in(to_ini(config));
  std::string line, section;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '[') {
      section = line.substr(1, line.size() - 2);
      out[section] = ordered_json::object();
      continue;
    }
    const auto eq = line.find(" = ");
    out[section][line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

struct Context {
  const ScenarioConfig& config;
  const ScenarioFlags& flags;
  OutputDirectory& dir;
  std::ostream& log;
  ordered_json results = ordered_json::object();
  ordered_json check = nullptr;
  Diagnostics diagnostics;

  RunOptions options() const { return config.run_options(flags.jobs); }
  AnalyzeOptions<double> analysis() const { return config.analyze_options(flags.jobs); }
};

void require_converged(Context& ctx, double shift, const std::string& what) {
  const double tol = ctx.config.run.check_tolerance;
  ctx.check = {{"what", what},
               {"steps_per_period", ctx.config.run.steps_per_period},
               {"doubled_steps_per_period", 2 * ctx.config.run.steps_per_period},
               {"max_shift", shift},
               {"tolerance", tol},
               {"passed", shift < tol}};
  ctx.log << "check: " << what << " shift " << shift << " (tolerance " << tol << ")\n";
  if (!(shift < tol))
    throw NumericalError("step-doubling check failed for " + what + ": shift " + std::to_string(shift) +
                         " exceeds " + std::to_string(tol));
}

// Compares Floquet spectra at steps_per_period and twice that.
void check_spectrum(Context& ctx, const LatticeConfig<double>& config) {
  auto opts = ctx.analysis().monodromy;
  const auto coarse = floquet_spectrum(monodromy(config, opts), config.drive.omega);
  opts.steps_per_period *= 2;
  const auto fine = floquet_spectrum(monodromy(config, opts), config.drive.omega);
  double shift = 0;
  for (const auto& m : coarse.modes) {
    double nearest = 1e300;
    for (const auto& f : fine.modes) nearest = std::min(nearest, std::abs(m.quasi_energy - f.quasi_energy));
    shift = std::max(shift, nearest);
  }
  require_converged(ctx, shift, "quasi-energies");
}

void check_evolution(Context& ctx, const LatticeConfig<double>& config, const StateVector<double>& initial,
                     double t_final) {
  const auto report = check_step_convergence(config, initial, t_final, ctx.config.evolve_options(),
                                             ctx.config.run.check_tolerance);
  require_converged(ctx, report.max_amplitude_shift, "final amplitudes");
}

ordered_json spectrum_summary(const SpectrumResult<double>& s) {
  ordered_json out = {{"modes", s.modes.size()},
                      {"extended", s.count(ModeLabel::extended)},
                      {"BIC", s.count(ModeLabel::bic)},
                      {"dark_BIC", s.count(ModeLabel::dark_bic)},
                      {"BOC", s.count(ModeLabel::boc)},
                      {"band", {s.band.lower, s.band.upper}},
                      {"band_margin", s.band.margin}};
  if (const auto* dark = s.dark_mode()) {
    out["dark_quasi_energy"] = complex_json(dark->quasi_energy);
    out["dark_lossy_population"] = dark->lossy_population;
    out["dark_mode_index"] = dark->mode_index;
  }
  return out;
}

void write_trajectory_files(Context& ctx, const Trajectory<double>& traj, const LatticeConfig<double>& config,
                            const std::string& suffix) {
  if (ctx.config.output.trajectories) {
    auto out = ctx.dir.open("trajectory" + suffix + ".csv");
    write_trajectory_csv(out, traj, config);
  }
  auto out = ctx.dir.open("summary" + suffix + ".csv");
  write_summary_csv(out, traj);
}

void run_spectrum(Context& ctx) {
  const auto config = ctx.config.model.build();
  if (ctx.flags.check) check_spectrum(ctx, config);
  const auto spectrum = analyze(config, ctx.analysis());
  {
    auto out = ctx.dir.open("spectrum.csv");
    write_spectrum_csv(out, spectrum);
  }
  if (ctx.config.output.profiles) {
    auto out = ctx.dir.open("profiles.csv");
    write_profiles_csv(out, spectrum, config);
  }
  ctx.results = spectrum_summary(spectrum);
  ctx.log << "spectrum: " << spectrum.bic_count() << " BIC (" << spectrum.count(ModeLabel::dark_bic) << " dark), "
          << spectrum.count(ModeLabel::boc) << " BOC\n";
}

void run_ipr_map(Context& ctx) {
  const auto& grid = ctx.config.run.gamma_norm_grid;
  if (ctx.flags.check) check_spectrum(ctx, ctx.config.model.with_gamma_norm(grid.front()).build());
  const auto rows = ipr_map(ctx.config.model, grid, ctx.options());
  {
    auto out = ctx.dir.open("ipr_map.csv");
    write_ipr_map_csv(out, rows);
  }
  auto out = ctx.dir.open("quasienergy_map.csv");
  write_quasienergy_map_csv(out, rows);
  ctx.results = {{"gamma_norm_points", grid.size()}, {"rows", rows.size()}};
}

StateVector<double> initial_state(Context& ctx, const LatticeConfig<double>& config) {
  const auto& run = ctx.config.run;
  switch (run.initial) {
    case InitialState::dark_bic: {
      const auto dark = find_dark_bic(ctx.config.model, ctx.analysis());
      if (!dark) throw NumericalError("no dark BIC found for this configuration");
      ctx.results["dark_quasi_energy"] = complex_json(dark->quasi_energy);
      ctx.results["dark_lossy_population"] = dark->lossy_population;
      return {dark->profile, 0.0};
    }
    case InitialState::packet:
      return gaussian_packet(run.packet, config.n_sites, &ctx.diagnostics);
    case InitialState::site: {
      if (!config.contains(run.initial_site))
        throw ConfigError("run.initial_site " + std::to_string(run.initial_site) + " is off the lattice");
      StateVector<double> s{CVector<double>::Zero(config.n_sites), 0.0};
      s.amplitudes(config.index_of(run.initial_site)) = 1;
      return s;
    }
  }
  throw std::logic_error("unhandled initial state");
}

void run_evolve(Context& ctx) {
  const auto config = ctx.config.model.build();
  const auto initial = initial_state(ctx, config);
  const double t_final = ctx.config.run.periods * config.drive.period();
  if (ctx.flags.check) check_evolution(ctx, config, initial, t_final);
  const auto traj = evolve(config, initial, t_final, ctx.config.evolve_options());
  write_trajectory_files(ctx, traj, config, "");
  ctx.results["t_final"] = t_final;
  ctx.results["P"] = traj.leak.back();
  ctx.results["final_norm"] = traj.final_norm();
  ctx.results["overlap"] = profile_overlap(traj.states.front(), traj.states.back());
  ctx.results["norm_leak_residual"] = norm_leak_residual(traj);
  ctx.results["site_leak"] = ordered_json::array();
  for (int i = 0; i < config.n_sites; ++i)
    if (traj.site_leak(i) != 0) ctx.results["site_leak"].push_back({{"n", config.site_of(i)}, {"P", traj.site_leak(i)}});
}

void run_scatter(Context& ctx) {
  const auto& run = ctx.config.run;
  const auto base = ctx.config.model.build();
  gaussian_packet(run.packet, base.n_sites, &ctx.diagnostics);
  if (ctx.flags.check) {
    const auto config = ctx.config.model.with_gamma(run.gamma_grid.front()).build();
    check_evolution(ctx, config, gaussian_packet(run.packet, config.n_sites), run.periods * config.drive.period());
  }
  std::vector<Trajectory<double>> trajectories;
  const auto points = reflectivity_sweep(ctx.config.model, run.gamma_grid, run.packet, run.periods, ctx.options(),
                                         &trajectories);
  {
    auto out = ctx.dir.open("reflectivity.csv");
    write_reflectivity_csv(out, points);
  }
  for (std::size_t i = 0; i < points.size(); ++i)
    write_trajectory_files(ctx, trajectories[i], ctx.config.model.with_gamma(points[i].gamma).build(),
                           "_" + std::to_string(i));
  ctx.results["points"] = points.size();
}

void run_decay(Context& ctx) {
  const auto& run = ctx.config.run;
  DecaySweep sweep;
  sweep.variable = run.decay_variable;
  sweep.grid = run.decay_variable == DecayVariable::gamma ? run.gamma_grid : run.omega_grid;
  sweep.probe_time = run.probe_time;
  sweep.probe_periods = run.probe_periods;
  sweep.retune_to_beta_root = run.retune_to_beta_root;
  if (ctx.flags.check) {
    ModelSpec first = sweep.variable == DecayVariable::gamma ? ctx.config.model.with_gamma(sweep.grid.front())
                                                             : ctx.config.model.with_omega(sweep.grid.front());
    if (sweep.variable == DecayVariable::omega && sweep.retune_to_beta_root)
      first.gamma_norm = beta_root(first.k, first.g, first.omega, {2.2, 2.6}, run.truncation);
    const auto dark = find_dark_bic(first, ctx.analysis());
    if (!dark) throw NumericalError("no dark BIC at the first grid point; cannot run the step-doubling check");
    const auto config = first.build();
    const double t = sweep.probe_time ? *sweep.probe_time : sweep.probe_periods * config.drive.period();
    check_evolution(ctx, config, {dark->profile, 0.0}, t);
  }
  const auto points = decay_sweep(ctx.config.model, sweep, ctx.options());
  auto out = ctx.dir.open("decay.csv");
  write_decay_csv(out, points);
  int skipped = 0;
  for (const auto& p : points)
    if (!p.found) {
      ++skipped;
      ctx.diagnostics.warn("decay point " + csv_number(p.value) + ": " + p.diagnostic);
    }
  ctx.results = {{"points", points.size()}, {"skipped", skipped}};
}

void run_nonlinear(Context& ctx) {
  const auto& run = ctx.config.run;
  if (ctx.flags.check) {
    const double largest = *std::max_element(run.u_grid.begin(), run.u_grid.end(),
                                             [](double a, double b) { return std::abs(a) < std::abs(b); });
    const auto dark = find_dark_bic(ctx.config.model, ctx.analysis());
    if (!dark) throw NumericalError("no dark BIC in the linear model");
    const auto config = ctx.config.model.with_u(largest).build();
    check_evolution(ctx, config, {dark->profile, 0.0}, run.periods * config.drive.period());
  }
  std::vector<Trajectory<double>> trajectories;
  const auto points = nonlinear_stability(ctx.config.model, run.u_grid, run.periods, ctx.options(), &trajectories);
  {
    auto out = ctx.dir.open("nonlinear.csv");
    write_nonlinear_csv(out, points);
  }
  for (std::size_t i = 0; i < points.size(); ++i)
    write_trajectory_files(ctx, trajectories[i], ctx.config.model.with_u(points[i].u).build(), "_" + std::to_string(i));
  ctx.results["points"] = points.size();
}

void run_multimode(Context& ctx) {
  const auto& run = ctx.config.run;
  auto table = ctx.dir.open("multimode.csv");
  CsvWriter csv(table, {"modes", "found", "re_eps", "im_eps", "lossy_population", "overlap", "P",
                        "final_lossy_population", "norm_leak_residual"});
  ctx.results["modes"] = ordered_json::array();
  for (int m : run.modes_grid) {
    ModelSpec spec = ctx.config.model;
    spec.profile = ProfileKind::multimode;
    spec.modes = m;
    const auto config = spec.build();
    if (ctx.flags.check && m == run.modes_grid.front()) check_spectrum(ctx, config);
    const auto spectrum = analyze(config, ctx.analysis());
    const std::string suffix = "_M" + std::to_string(m);
    {
      auto out = ctx.dir.open("spectrum" + suffix + ".csv");
      write_spectrum_csv(out, spectrum);
    }
    auto summary = spectrum_summary(spectrum);
    summary["M"] = m;
    const auto* dark = spectrum.dark_mode();
    if (!dark) {
      ctx.diagnostics.warn("M = " + std::to_string(m) + ": no dark BIC");
      csv << m << 0 << 0.0 << 0.0 << 0.0 << 0.0 << 0.0 << 0.0 << 0.0;
      csv.end_row();
      ctx.results["modes"].push_back(summary);
      continue;
    }
    const auto traj = evolve(config, {dark->profile, 0.0}, run.periods * config.drive.period(), ctx.config.evolve_options());
    write_trajectory_files(ctx, traj, config, suffix);
    double lossy = 0;
    for (int site : lossy_indices(config)) lossy += std::norm(traj.states.back()(site));
    lossy /= traj.final_norm();
    const double overlap = profile_overlap(traj.states.front(), traj.states.back());
    csv << m << 1 << dark->quasi_energy.real() << dark->quasi_energy.imag() << dark->lossy_population << overlap
        << traj.leak.back() << lossy << norm_leak_residual(traj);
    csv.end_row();
    summary["overlap"] = overlap;
    summary["P"] = traj.leak.back();
    ctx.results["modes"].push_back(summary);
  }
}

void run_hfe(Context& ctx) {
  const auto& run = ctx.config.run;
  const auto& model = ctx.config.model;
  const int L = run.truncation;
  {
    auto out = ctx.dir.open("rates.csv");
    CsvWriter csv(out, {"gamma_norm", "omega", "q", "j0", "eta", "zeta", "alpha", "beta"});
    for (double x : run.gamma_norm_grid) {
      const auto r = named_rates(model.k, model.g, x, model.omega, L);
      csv << x << model.omega << r.q << bessel_j(0, x) << r.eta << r.zeta << r.alpha << r.beta;
      csv.end_row();
    }
  }
  const double x0 = j0_first_zero<double>();
  {
    auto out = ctx.dir.open("beta_roots.csv");
    CsvWriter csv(out, {"omega", "gamma_star", "offset", "offset_omega2"});
    for (double w : run.omega_grid) {
      const double root = beta_root(model.k, model.g, w, {2.2, 2.6}, L);
      csv << w << root << root - x0 << (root - x0) * w * w;
      csv.end_row();
    }
  }
  const int modes = model.profile == ProfileKind::multimode ? model.modes : 3;
  const double root = beta_root(model.k, model.g, model.omega, {2.2, 2.6}, L);
  const auto rates = named_rates(model.k, model.g, root, model.omega, L);
  const auto chain = reduced_chain(modes, rates.zeta, model.gamma);
  {
    auto out = ctx.dir.open("reduced_chain.csv");
    CsvWriter csv(out, {"index", "re", "im", "dark_state"});
    for (int i = 0; i < chain.dimension(); ++i) {
      csv << i << chain.eigenvalues(i).real() << chain.eigenvalues(i).imag() << chain.dark_state(i).real();
      csv.end_row();
    }
  }

  const auto q = q_gamma_checked(model.gamma_norm, L);
  if (!q.converged) ctx.diagnostics.warn("Q(Gamma) truncation did not converge by L = 40");
  const auto config = model.build();
  const auto cmp = hfe_vs_exact(config, ctx.analysis(), L);
  ordered_json report = {{"gamma_norm", cmp.gamma_norm},
                         {"omega", cmp.omega},
                         {"modes", cmp.modes},
                         {"gamma", cmp.loss},
                         {"q", {{"value", q.value}, {"truncation", q.truncation},
                                {"doubling_change", q.doubling_change}, {"converged", q.converged}}},
                         {"rates", {{"eta", cmp.rates.eta}, {"zeta", cmp.rates.zeta}, {"alpha", cmp.rates.alpha},
                                    {"beta", cmp.rates.beta}}},
                         {"beta_root", root},
                         {"exact_bic", ordered_json::array()},
                         {"matched_reduced", ordered_json::array()},
                         {"residuals", cmp.residuals},
                         {"max_residual", cmp.max_residual},
                         {"reduced", ordered_json::array()},
                         {"has_dark", cmp.has_dark},
                         {"exact_band_half_width", cmp.exact_band_half_width},
                         {"effective_band_half_width", cmp.effective_band_half_width}};
  for (const auto& e : cmp.exact_bic) report["exact_bic"].push_back(complex_json(e));
  for (const auto& e : cmp.matched_reduced) report["matched_reduced"].push_back(complex_json(e));
  for (const auto& e : cmp.reduced) report["reduced"].push_back(complex_json(e));
  if (cmp.has_dark) report["exact_dark"] = complex_json(cmp.exact_dark);
  auto out = ctx.dir.open("comparison.json");
  out << report.dump(2) << '\n';
  ctx.results = {{"beta_root", root}, {"max_residual", cmp.max_residual}, {"q_converged", q.converged}};
}

using Runner = void (*)(Context&);

const std::vector<std::pair<std::string, Runner>>& runners() {
  static const std::vector<std::pair<std::string, Runner>> table = {
      {"spectrum", run_spectrum}, {"ipr-map", run_ipr_map},     {"evolve", run_evolve},
      {"scatter", run_scatter},   {"decay", run_decay},         {"nonlinear", run_nonlinear},
      {"multimode", run_multimode}, {"hfe", run_hfe}};
  return table;
}

}  // namespace

const std::vector<std::string>& scenario_commands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, runner] : runners()) out.push_back(name);
    return out;
  }();
  return names;
}

int run_scenario(const std::string& command, const ScenarioConfig& config, const ScenarioFlags& flags,
                 std::ostream& log) {
  const auto it = std::find_if(runners().begin(), runners().end(), [&](const auto& r) { return r.first == command; });
  if (it == runners().end()) {
    log << "error: unknown subcommand '" << command << "'\n";
    return exit_config;
  }
  const auto started = std::chrono::steady_clock::now();
  try {
    validate_for(config, command);
    if (flags.jobs < 1) throw ConfigError("--jobs must be at least 1");
    OutputDirectory dir(flags.out, flags.force);
    dir.prepare();
    Context ctx{config, flags, dir, log, {}, nullptr, {}};
    it->second(ctx);

    {
      auto resolved = dir.open("config.resolved.cfg");
      resolved << to_ini(config);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    ordered_json manifest = {
        {"program", "fbic"},
        {"version", FBIC_VERSION},
        {"command", command},
        {"config_file", flags.config_path},
        {"overrides", flags.overrides},
        {"jobs", flags.jobs},
        {"steps_per_period", config.run.steps_per_period},
        {"samples_per_period", config.run.samples_per_period},
        {"frame", config.run.frame == Frame::rotating ? "rotating" : "lab"},
        {"wall_time_seconds", seconds},
        {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
        {"compiler", __VERSION__},
        {"config", config_json(config)},
        {"rerun", "fbic " + command + " --config config.resolved.cfg --out <dir>"},
        {"check", ctx.check},
        {"diagnostics", ctx.diagnostics.messages},
        {"results", ctx.results},
    };
    auto files = dir.files();
    files.push_back("manifest.json");
    manifest["files"] = files;
    auto out = dir.open("manifest.json");
    out << manifest.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing manifest.json");
    for (const auto& message : ctx.diagnostics.messages) log << "warning: " << message << '\n';
    log << command << ": wrote " << files.size() << " files to " << flags.out.string() << " in " << seconds << " s\n";
    return exit_ok;
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const NumericalError& e) {
    log << "error: " << e.what() << '\n';
    return exit_numerical;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return exit_failure;
  }
}

}  // namespace fbic
