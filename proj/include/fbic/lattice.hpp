#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbic/types.hpp"

namespace fbic {

enum class Boundary { open, periodic };

/// Drive F(t) = f0 cos(omega t) acting on the site potential a * F(t) * n.
template <typename Real = double>
struct Drive {
  Real f0 = 0;
  Real omega = 1;
  Real lattice_constant = 1;

  /// Drive with the given dimensionless strength Gamma = f0 a / omega.
  static Drive from_gamma_norm(Real gamma_norm, Real omega, Real lattice_constant = 1) {
    return Drive{gamma_norm * omega / lattice_constant, omega, lattice_constant};
  }

  Real gamma_norm() const { return f0 * lattice_constant / omega; }
  Real period() const { return 2 * pi<Real> / omega; }
};

template <typename Real = double>
struct DriveParams {
  Real gamma_norm;
  Real period;
};

/// Static description of the driven lossy chain.
///
/// Sites carry signed labels n = -(N-1)/2 ... (N-1)/2; storage index is n + (N-1)/2.
/// hopping(i) couples storage sites i and i+1. With Boundary::periodic an extra
/// bond of strength hopping(0) joins the last site to the first.
template <typename Real = double>
struct LatticeConfig {
  int n_sites = 0;
  RVector<Real> hopping;
  RVector<Real> loss;
  RVector<Real> nonlinearity;
  Drive<Real> drive;
  Boundary boundary = Boundary::open;

  int half_width() const { return (n_sites - 1) / 2; }
  int index_of(int site) const { return site + half_width(); }
  int site_of(int index) const { return index - half_width(); }
  bool contains(int site) const { return std::abs(site) <= half_width(); }

  /// K_n for signed n, the bond between sites n and n+1.
  Real hopping_at(int site) const { return hopping(index_of(site)); }
  Real loss_at(int site) const { return loss(index_of(site)); }

  bool is_linear() const { return nonlinearity.size() == 0 || (nonlinearity.array() == Real(0)).all(); }
  bool is_hermitian() const { return (loss.array() == Real(0)).all(); }

  DriveParams<Real> drive_params() const { return {drive.gamma_norm(), drive.period()}; }

  void validate() const {
    if (n_sites < 1 || n_sites % 2 == 0)
      throw std::invalid_argument("n_sites must be a positive odd integer, got " + std::to_string(n_sites));
    if (hopping.size() != n_sites - 1)
      throw std::invalid_argument("hopping array must have n_sites - 1 entries");
    if (loss.size() != n_sites)
      throw std::invalid_argument("loss array must have n_sites entries");
    if (nonlinearity.size() != 0 && nonlinearity.size() != n_sites)
      throw std::invalid_argument("nonlinearity array must be empty or have n_sites entries");
    if ((loss.array() < Real(0)).any())
      throw std::invalid_argument("loss rates must be non-negative (gain is not modelled)");
    if (!loss.allFinite() || !hopping.allFinite() || (nonlinearity.size() && !nonlinearity.allFinite()))
      throw std::invalid_argument("lattice arrays must be finite");
    if (!(drive.omega > 0)) throw std::invalid_argument("drive frequency must be positive");
    if (!(drive.lattice_constant > 0)) throw std::invalid_argument("lattice constant must be positive");
    if (!std::isfinite(drive.f0)) throw std::invalid_argument("drive amplitude must be finite");
  }
};

/// Builds and validates a config from explicit arrays. An empty nonlinearity means U = 0.
template <typename Real>
LatticeConfig<Real> make_lattice(RVector<Real> hopping, RVector<Real> loss, Drive<Real> drive,
                                 RVector<Real> nonlinearity = {}, Boundary boundary = Boundary::open) {
  LatticeConfig<Real> config;
  config.n_sites = static_cast<int>(loss.size());
  config.hopping = std::move(hopping);
  config.loss = std::move(loss);
  config.nonlinearity = nonlinearity.size() ? std::move(nonlinearity) : RVector<Real>::Zero(config.n_sites);
  config.drive = drive;
  config.boundary = boundary;
  config.validate();
  return config;
}

template <typename Real>
LatticeConfig<Real> uniform_profile(int n_sites, Real k, Drive<Real> drive = {}) {
  if (n_sites < 1 || n_sites % 2 == 0) throw std::invalid_argument("n_sites must be a positive odd integer");
  return make_lattice<Real>(RVector<Real>::Constant(n_sites - 1, k), RVector<Real>::Zero(n_sites), drive);
}

/// Defect profile: K_n = g for -M <= n <= M-1 (k elsewhere), loss gamma on
/// sites n = -M + 2m for m = 1 .. M-1.
template <typename Real>
LatticeConfig<Real> multimode_profile(int n_sites, int modes, Real k, Real g, Real gamma, Drive<Real> drive = {}) {
  if (modes < 2) throw std::invalid_argument("multimode profile needs M >= 2");
  if (n_sites < 1 || n_sites % 2 == 0) throw std::invalid_argument("n_sites must be a positive odd integer");
  if ((n_sites - 1) / 2 < modes + 1)
    throw std::invalid_argument("multimode profile with M = " + std::to_string(modes) +
                                " does not fit in " + std::to_string(n_sites) + " sites");
  if (!(k > 0) || !(g > 0)) throw std::invalid_argument("hoppings k and g must be positive");
  if (gamma < 0) throw std::invalid_argument("loss rate must be non-negative");

  const int half = (n_sites - 1) / 2;
  RVector<Real> hopping = RVector<Real>::Constant(n_sites - 1, k);
  for (int n = -modes; n <= modes - 1; ++n) hopping(n + half) = g;
  RVector<Real> loss = RVector<Real>::Zero(n_sites);
  for (int m = 1; m <= modes - 1; ++m) loss(-modes + 2 * m + half) = gamma;
  return make_lattice<Real>(std::move(hopping), std::move(loss), drive);
}

/// Five-site defect: g-bonds on n = -3 .. 2 and lossy sites n = +-1.
template <typename Real>
LatticeConfig<Real> defect_profile(int n_sites, Real k, Real g, Real gamma, Drive<Real> drive = {}) {
  if (n_sites < 9) throw std::invalid_argument("defect profile needs at least 9 sites");
  return multimode_profile<Real>(n_sites, 3, k, g, gamma, drive);
}

template <typename Real>
LatticeConfig<Real> with_drive(LatticeConfig<Real> config, Drive<Real> drive) {
  config.drive = drive;
  config.validate();
  return config;
}

/// Storage indices of sites with non-zero loss.
template <typename Real>
std::vector<int> lossy_indices(const LatticeConfig<Real>& config) {
  std::vector<int> out;
  for (int i = 0; i < config.n_sites; ++i)
    if (config.loss(i) > 0) out.push_back(i);
  return out;
}

/// Lab-frame H(t): hopping K_n, potential a F0 cos(omega t) n - i gamma_n.
template <typename Real>
CMatrix<Real> hamiltonian_at(const LatticeConfig<Real>& config, Real t) {
  using C = Complex<Real>;
  const int n = config.n_sites;
  const Real force = config.drive.f0 * std::cos(config.drive.omega * t) * config.drive.lattice_constant;
  CMatrix<Real> h = CMatrix<Real>::Zero(n, n);
  for (int i = 0; i < n; ++i) h(i, i) = C(force * Real(config.site_of(i)), -config.loss(i));
  for (int i = 0; i + 1 < n; ++i) h(i, i + 1) = h(i + 1, i) = config.hopping(i);
  if (config.boundary == Boundary::periodic && n > 2) h(0, n - 1) = h(n - 1, 0) = config.hopping(0);
  return h;
}

/// Rotating-frame H'(t) after removing the drive with the site-local phase
/// exp(-i Gamma sin(omega t) n): bond (n, n+1) picks up exp(-+ i Gamma sin(omega t)).
template <typename Real>
CMatrix<Real> rotating_hamiltonian_at(const LatticeConfig<Real>& config, Real t) {
  using C = Complex<Real>;
  const int n = config.n_sites;
  const Real phase = config.drive.gamma_norm() * std::sin(config.drive.omega * t);
  const C up = std::polar(Real(1), -phase);
  CMatrix<Real> h = CMatrix<Real>::Zero(n, n);
  for (int i = 0; i < n; ++i) h(i, i) = C(0, -config.loss(i));
  for (int i = 0; i + 1 < n; ++i) {
    h(i, i + 1) = config.hopping(i) * up;
    h(i + 1, i) = config.hopping(i) * std::conj(up);
  }
  if (config.boundary == Boundary::periodic && n > 2) {
    const C wrap = std::polar(Real(1), phase * Real(n - 1));
    h(n - 1, 0) = config.hopping(0) * wrap;
    h(0, n - 1) = config.hopping(0) * std::conj(wrap);
  }
  return h;
}

}  // namespace fbic
