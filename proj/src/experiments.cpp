#include "fbic/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fbic/hfe.hpp"
#include "fbic/parallel.hpp"

namespace fbic {

namespace {

RVector<double> to_vector(const std::vector<double>& values) {
  return Eigen::Map<const RVector<double>>(values.data(), static_cast<Eigen::Index>(values.size()));
}

// Storage indices of the sites that carry loss in the defect profile, independent of its strength.
std::vector<int> defect_loss_sites(const ModelSpec& spec) {
  std::vector<int> sites;
  const int half = (spec.n_sites - 1) / 2;
  switch (spec.profile) {
    case ProfileKind::defect:
    case ProfileKind::multimode: {
      const int modes = spec.profile == ProfileKind::defect ? 3 : spec.modes;
      for (int m = 1; m <= modes - 1; ++m) sites.push_back(-modes + 2 * m + half);
      break;
    }
    case ProfileKind::explicit_arrays:
      for (std::size_t i = 0; i < spec.loss.size(); ++i)
        if (spec.loss[i] != 0) sites.push_back(static_cast<int>(i));
      break;
    case ProfileKind::uniform:
      break;
  }
  return sites;
}

RunOptions serial_inner(const RunOptions& options) {
  RunOptions inner = options;
  inner.analysis.monodromy.jobs = 1;
  return inner;
}

}  // namespace

LatticeConfig<double> ModelSpec::build() const {
  const auto drive = Drive<double>::from_gamma_norm(gamma_norm, omega, lattice_constant);
  LatticeConfig<double> config;
  switch (profile) {
    case ProfileKind::defect:
      config = defect_profile(n_sites, k, g, gamma, drive);
      break;
    case ProfileKind::multimode:
      config = multimode_profile(n_sites, modes, k, g, gamma, drive);
      break;
    case ProfileKind::uniform:
      config = uniform_profile(n_sites, k, drive);
      break;
    case ProfileKind::explicit_arrays:
      if (loss.empty()) throw std::invalid_argument("explicit profile needs a loss array");
      if (hopping.size() + 1 != loss.size())
        throw std::invalid_argument("explicit profile: hopping must have one entry fewer than loss");
      config = make_lattice<double>(to_vector(hopping), to_vector(loss), drive,
                                    nonlinearity.empty() ? RVector<double>() : to_vector(nonlinearity));
      break;
  }
  if (u != 0) {
    std::vector<int> sites = defect_loss_sites(*this);
    if (!nonlinear_sites.empty()) {
      sites.clear();
      for (int n : nonlinear_sites) {
        if (!config.contains(n)) throw std::invalid_argument("nonlinear site " + std::to_string(n) + " is off the lattice");
        sites.push_back(config.index_of(n));
      }
    }
    for (int site : sites) config.nonlinearity(site) = u;
  }
  config.boundary = boundary;
  config.validate();
  return config;
}

ModelSpec ModelSpec::with_gamma(double value) const {
  ModelSpec out = *this;
  out.gamma = value;
  if (profile == ProfileKind::explicit_arrays)
    for (double& entry : out.loss)
      if (entry != 0) entry = value;
  return out;
}

ModelSpec ModelSpec::with_omega(double value) const {
  ModelSpec out = *this;
  out.omega = value;
  return out;
}

ModelSpec ModelSpec::with_gamma_norm(double value) const {
  ModelSpec out = *this;
  out.gamma_norm = value;
  return out;
}

ModelSpec ModelSpec::with_u(double value) const {
  ModelSpec out = *this;
  out.u = value;
  return out;
}

StateVector<double> gaussian_packet(const PacketSpec& spec, int n_sites, Diagnostics* diagnostics) {
  if (!(spec.width > 0)) throw std::invalid_argument("packet width must be positive");
  if (std::abs(spec.momentum) > pi<double>) throw std::invalid_argument("packet momentum must satisfy |p| <= pi");
  if (n_sites < 1 || n_sites % 2 == 0) throw std::invalid_argument("n_sites must be a positive odd integer");
  const int half = (n_sites - 1) / 2;
  StateVector<double> state;
  state.amplitudes.resize(n_sites);
  for (int i = 0; i < n_sites; ++i) {
    const double n = i - half;
    const double x = (n - spec.center) / spec.width;
    state.amplitudes(i) = std::exp(-x * x) * std::polar(1.0, -spec.momentum * n);
  }
  state.amplitudes.normalize();
  const double tail = std::max(std::abs(state.amplitudes(0)), std::abs(state.amplitudes(n_sites - 1)));
  if (tail > 1e-8 && diagnostics)
    diagnostics->warn("gaussian packet edge amplitude " + std::to_string(tail) + " exceeds 1e-8");
  return state;
}

ReflectivityResult reflectivity(const Trajectory<double>& traj, double t_final, int n_sites) {
  if (traj.times.empty()) throw std::invalid_argument("empty trajectory");
  if (t_final > traj.times.back() * (1 + 1e-12) + 1e-12)
    throw std::out_of_range("t_f = " + std::to_string(t_final) + " is beyond the trajectory");
  const int sample = traj.sample_at(t_final);
  if (sample < 0) throw std::invalid_argument("t_f = " + std::to_string(t_final) + " is not a stored sample");
  const auto& initial = traj.states.front();
  const auto& final = traj.states[static_cast<std::size_t>(sample)];
  if (initial.size() != n_sites) throw std::invalid_argument("trajectory does not match lattice size");
  const int half = (n_sites - 1) / 2;
  ReflectivityResult r;
  r.t_final = traj.times[static_cast<std::size_t>(sample)];
  r.initial_norm = initial.squaredNorm();
  r.left_population = final.head(half + 1).squaredNorm();
  r.final_norm = final.squaredNorm();
  r.reflectivity = r.left_population / r.initial_norm;
  r.surviving_fraction = r.final_norm > 0 ? r.left_population / r.final_norm : 0.0;
  return r;
}

double profile_overlap(const CVector<double>& a, const CVector<double>& b) {
  const double denom = a.squaredNorm() * b.squaredNorm();
  if (!(denom > 0)) throw std::invalid_argument("overlap with a zero profile");
  return std::norm(a.dot(b)) / denom;
}

double norm_leak_residual(const Trajectory<double>& traj) {
  double worst = 0;
  for (std::size_t i = 0; i < traj.size(); ++i)
    worst = std::max(worst, std::abs(traj.initial_norm - traj.norms[i] - traj.leak[i]));
  return worst;
}

std::optional<DarkBic> find_dark_bic(const ModelSpec& spec, const AnalyzeOptions<double>& options) {
  const auto spectrum = analyze(spec.with_u(0).build(), options);
  const auto* mode = spectrum.dark_mode();
  if (!mode) return std::nullopt;
  return DarkBic{mode->quasi_energy, mode->profile, mode->ipr, mode->lossy_population, mode->mode_index};
}

std::vector<IprMapRow> ipr_map(const ModelSpec& spec, const std::vector<double>& gamma_norms, const RunOptions& options) {
  if (gamma_norms.empty()) throw std::invalid_argument("ipr_map: empty Gamma grid");
  std::vector<std::vector<IprMapRow>> per_point(gamma_norms.size());
  const RunOptions inner = serial_inner(options);
  parallel_for(gamma_norms.size(), options.jobs, [&](std::size_t i) {
    const auto spectrum = analyze(spec.with_gamma_norm(gamma_norms[i]).build(), inner.analysis);
    auto& rows = per_point[i];
    rows.reserve(spectrum.modes.size());
    for (const auto& mode : spectrum.modes)
      rows.push_back({gamma_norms[i], mode.mode_index, mode.ipr, mode.quasi_energy, mode.label});
  });
  std::vector<IprMapRow> rows;
  for (auto& block : per_point) rows.insert(rows.end(), block.begin(), block.end());
  return rows;
}

std::vector<DecayPoint> decay_sweep(const ModelSpec& spec, const DecaySweep& sweep, const RunOptions& options) {
  if (sweep.grid.empty()) throw std::invalid_argument("decay_sweep: empty grid");
  std::vector<DecayPoint> points(sweep.grid.size());
  const RunOptions inner = serial_inner(options);
  parallel_for(sweep.grid.size(), options.jobs, [&](std::size_t i) {
    const double value = sweep.grid[i];
    ModelSpec point = sweep.variable == DecayVariable::gamma ? spec.with_gamma(value) : spec.with_omega(value);
    if (sweep.variable == DecayVariable::omega && sweep.retune_to_beta_root)
      point.gamma_norm = beta_root(point.k, point.g, point.omega);
    DecayPoint& out = points[i];
    out.value = value;
    out.gamma_norm = point.gamma_norm;
    out.omega = point.omega;
    out.gamma = point.gamma;
    const double period = 2 * pi<double> / point.omega;
    out.probe_time = sweep.probe_time ? *sweep.probe_time : sweep.probe_periods * period;
    const auto dark = find_dark_bic(point, inner.analysis);
    if (!dark) {
      out.diagnostic = "no dark BIC at this grid point";
      return;
    }
    out.found = true;
    out.dark_quasi_energy = dark->quasi_energy;
    const auto traj = evolve(point.build(), StateVector<double>{dark->profile, 0.0}, out.probe_time, inner.evolve);
    out.probability = decay_probability(traj, out.probe_time);
    out.norm_leak_residual = norm_leak_residual(traj);
  });
  return points;
}

DarkEvolution dark_bic_evolution(const ModelSpec& spec, double periods, const RunOptions& options) {
  if (!(periods > 0)) throw std::invalid_argument("evolution horizon must be positive");
  const auto dark = find_dark_bic(spec, options.analysis);
  if (!dark) throw NumericalError("no dark BIC found for this configuration");
  const auto config = spec.build();
  const double period = config.drive.period();
  DarkEvolution out;
  out.dark = *dark;
  out.trajectory = evolve(config, StateVector<double>{dark->profile, 0.0}, periods * period, options.evolve);
  const auto& traj = out.trajectory;
  out.overlap = profile_overlap(traj.states.front(), traj.states.back());
  out.probability = traj.leak.back();
  for (int site : lossy_indices(config)) out.final_lossy_population += std::norm(traj.states.back()(site));
  out.final_lossy_population /= traj.final_norm();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double cycles = traj.times[i] / period;
    if (std::abs(cycles - std::round(cycles)) < 1e-9) out.period_norms.push_back(traj.norms[i]);
  }
  return out;
}

std::vector<NonlinearPoint> nonlinear_stability(const ModelSpec& spec, const std::vector<double>& u_grid, double periods,
                                                const RunOptions& options, std::vector<Trajectory<double>>* trajectories) {
  if (u_grid.empty()) throw std::invalid_argument("nonlinear_stability: empty u grid");
  const auto dark = find_dark_bic(spec, options.analysis);
  if (!dark) throw NumericalError("no dark BIC in the linear model");
  std::vector<NonlinearPoint> points(u_grid.size());
  std::vector<Trajectory<double>> kept(u_grid.size());
  parallel_for(u_grid.size(), options.jobs, [&](std::size_t i) {
    const auto config = spec.with_u(u_grid[i]).build();
    auto traj = evolve_nonlinear(config, StateVector<double>{dark->profile, 0.0}, periods * config.drive.period(),
                                 options.evolve);
    points[i] = {u_grid[i], traj.leak.back(), profile_overlap(traj.states.front(), traj.states.back()),
                 traj.final_norm(), norm_leak_residual(traj)};
    if (trajectories) kept[i] = std::move(traj);
  });
  if (trajectories) *trajectories = std::move(kept);
  return points;
}

std::vector<ScatterPoint> reflectivity_sweep(const ModelSpec& spec, const std::vector<double>& gammas,
                                             const PacketSpec& packet, double periods, const RunOptions& options,
                                             std::vector<Trajectory<double>>* trajectories) {
  if (gammas.empty()) throw std::invalid_argument("reflectivity_sweep: empty gamma grid");
  if (!(periods > 0)) throw std::invalid_argument("scattering horizon must be positive");
  const auto initial = gaussian_packet(packet, spec.build().n_sites);
  std::vector<ScatterPoint> points(gammas.size());
  std::vector<Trajectory<double>> kept(gammas.size());
  parallel_for(gammas.size(), options.jobs, [&](std::size_t i) {
    const auto config = spec.with_gamma(gammas[i]).build();
    const double t_final = periods * config.drive.period();
    auto traj = evolve(config, initial, t_final, options.evolve);
    points[i] = {gammas[i], reflectivity(traj, traj.times.back(), config.n_sites), norm_leak_residual(traj)};
    if (trajectories) kept[i] = std::move(traj);
  });
  if (trajectories) *trajectories = std::move(kept);
  return points;
}

}  // namespace fbic
