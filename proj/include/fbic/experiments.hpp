#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fbic/floquet.hpp"
#include "fbic/integrator.hpp"
#include "fbic/lattice.hpp"

namespace fbic {

enum class ProfileKind { defect, multimode, uniform, explicit_arrays };

/// Parameterised model shared by every experiment. Sweeps copy it and change
/// one field (loss rate, frequency, drive strength, nonlinearity).
struct ModelSpec {
  ProfileKind profile = ProfileKind::defect;
  int n_sites = 101;
  int modes = 3;
  double k = 0.3;
  double g = 0.21;
  double gamma = 1.0;
  double gamma_norm = 2.4308;
  double omega = 1.0;
  double lattice_constant = 1.0;
  /// Nonlinearity strength placed on `nonlinear_sites` (site labels n, centre 0);
  /// when that list is empty it goes on the defect loss sites.
  double u = 0.0;
  std::vector<int> nonlinear_sites;
  Boundary boundary = Boundary::open;
  // profile = explicit_arrays
  std::vector<double> hopping;
  std::vector<double> loss;
  std::vector<double> nonlinearity;

  LatticeConfig<double> build() const;
  ModelSpec with_gamma(double value) const;
  ModelSpec with_omega(double value) const;
  ModelSpec with_gamma_norm(double value) const;
  ModelSpec with_u(double value) const;
};

/// Collects non-fatal warnings raised while setting up a run.
struct Diagnostics {
  std::vector<std::string> messages;
  void warn(std::string message) { messages.push_back(std::move(message)); }
};

struct PacketSpec {
  double center = -20;
  double width = 4;
  /// Phase factor exp(-i p n).
  double momentum = pi<double> / 2;
};

/// C_n = exp(-(n - n0)^2 / w^2 - i p n), normalised. Warns when the edge
/// amplitude exceeds 1e-8.
StateVector<double> gaussian_packet(const PacketSpec& spec, int n_sites, Diagnostics* diagnostics = nullptr);

struct ReflectivityResult {
  double reflectivity = 0;
  double t_final = 0;
  double initial_norm = 0;
  double left_population = 0;
  double final_norm = 0;
  /// Left-half population over the surviving norm at t_final.
  double surviving_fraction = 0;
};

/// R = sum_{n <= 0} |C_n(t_f)|^2 / sum_n |C_n(0)|^2. t_f must be a stored sample.
ReflectivityResult reflectivity(const Trajectory<double>& traj, double t_final, int n_sites);

/// |<a|b>|^2 / (|a|^2 |b|^2).
double profile_overlap(const CVector<double>& a, const CVector<double>& b);

struct RunOptions {
  AnalyzeOptions<double> analysis;
  EvolveOptions<double> evolve;
  int jobs = 1;
};

struct DarkBic {
  Complex<double> quasi_energy;
  CVector<double> profile;
  double ipr = 0;
  double lossy_population = 0;
  int mode_index = 0;
};

/// Dark BIC of the linear part of the model (U set to zero), if any.
std::optional<DarkBic> find_dark_bic(const ModelSpec& spec, const AnalyzeOptions<double>& options);

struct IprMapRow {
  double gamma_norm;
  int mode_index;
  double ipr;
  Complex<double> quasi_energy;
  ModeLabel label;
};

std::vector<IprMapRow> ipr_map(const ModelSpec& spec, const std::vector<double>& gamma_norms, const RunOptions& options);

enum class DecayVariable { gamma, omega };

struct DecaySweep {
  DecayVariable variable = DecayVariable::gamma;
  std::vector<double> grid;
  /// Absolute probe time; when unset, probe_periods * T at each point.
  std::optional<double> probe_time;
  double probe_periods = 8;
  /// For omega sweeps: put Gamma at the beta root of each omega instead of holding it.
  bool retune_to_beta_root = false;
};

struct DecayPoint {
  double value = 0;
  double gamma_norm = 0;
  double omega = 0;
  double gamma = 0;
  double probe_time = 0;
  bool found = false;
  double probability = 0;
  Complex<double> dark_quasi_energy;
  double norm_leak_residual = 0;
  std::string diagnostic;
};

std::vector<DecayPoint> decay_sweep(const ModelSpec& spec, const DecaySweep& sweep, const RunOptions& options);

struct DarkEvolution {
  DarkBic dark;
  Trajectory<double> trajectory;
  double overlap = 0;
  double probability = 0;
  double final_lossy_population = 0;
  /// Squared norm at each whole period 0, T, 2T, ...
  std::vector<double> period_norms;
};

/// Evolves the dark BIC (taken from the full monodromy) for `periods` drive periods.
DarkEvolution dark_bic_evolution(const ModelSpec& spec, double periods, const RunOptions& options);

struct NonlinearPoint {
  double u = 0;
  double probability = 0;
  double overlap = 0;
  double final_norm = 0;
  double norm_leak_residual = 0;
};

/// Starts from the linear (u = 0) dark BIC and evolves with U = u on the nonlinear sites.
std::vector<NonlinearPoint> nonlinear_stability(const ModelSpec& spec, const std::vector<double>& u_grid, double periods,
                                                const RunOptions& options, std::vector<Trajectory<double>>* trajectories = nullptr);

struct ScatterPoint {
  double gamma = 0;
  ReflectivityResult result;
  double norm_leak_residual = 0;
};

/// R(gamma) at t_f = periods * T for a Gaussian packet.
std::vector<ScatterPoint> reflectivity_sweep(const ModelSpec& spec, const std::vector<double>& gammas,
                                             const PacketSpec& packet, double periods, const RunOptions& options,
                                             std::vector<Trajectory<double>>* trajectories = nullptr);

/// |norm(0) - norm(t) - P(t)| maximised over the stored samples.
double norm_leak_residual(const Trajectory<double>& traj);

}  // namespace fbic
