#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fbic/bessel.hpp"
#include "fbic/floquet.hpp"
#include "fbic/lattice.hpp"

namespace fbic {

namespace detail {

// J_l(x) for l in [-max_order, max_order], stored at l + max_order. No order limit.
template <typename Real>
std::vector<Real> bessel_table(Real x, int max_order) {
  std::vector<Real> table(static_cast<std::size_t>(2 * max_order + 1));
  for (int l = 0; l <= max_order; ++l) {
    Real value;
    if (x == 0)
      value = l == 0 ? Real(1) : Real(0);
    else
      value = (x <= 2 || x * x < Real(l + 1)) ? bessel_series(l, x) : bessel_miller(l, x);
    table[static_cast<std::size_t>(max_order + l)] = value;
    table[static_cast<std::size_t>(max_order - l)] = (l % 2 ? -value : value);
  }
  return table;
}

}  // namespace detail

/// Fourier harmonics H'_l of the rotating-frame Hamiltonian,
/// H'(t) = sum_l exp(i l omega t) H'_l. Bond (n, n+1) carries K_n J_{-l}(Gamma)
/// above the diagonal and K_n J_l(Gamma) below it; H'_0 also holds -i gamma_n.
template <typename Real = double>
struct RotatingFrameModel {
  Real gamma_norm = 0;
  int truncation = 0;
  RVector<Real> hopping;
  RVector<Real> loss;
  std::vector<Real> weights;  // J_l(Gamma), l in [-truncation, truncation]

  Real weight(int l) const { return weights.at(static_cast<std::size_t>(l + truncation)); }

  CMatrix<Real> harmonic(int l) const {
    const auto n = loss.size();
    CMatrix<Real> h = CMatrix<Real>::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      h(i, i + 1) = hopping(i) * weight(-l);
      h(i + 1, i) = hopping(i) * weight(l);
    }
    if (l == 0)
      for (Eigen::Index i = 0; i < n; ++i) h(i, i) = Complex<Real>(0, -loss(i));
    return h;
  }
};

template <typename Real>
RotatingFrameModel<Real> rotating_frame_model(const LatticeConfig<Real>& config, Real gamma_norm, int truncation) {
  if (truncation < 0) throw std::invalid_argument("harmonic truncation must be non-negative");
  return {gamma_norm, truncation, config.hopping, config.loss, detail::bessel_table(gamma_norm, truncation)};
}

/// Q(Gamma) = -sum_{l, j != 0} J_l J_j J_{j-l} / (l j), truncated at |l|, |j| <= L.
template <typename Real>
Real q_gamma(Real gamma_norm, int truncation = 20) {
  if (truncation < 10) throw std::invalid_argument("q_gamma needs truncation L >= 10");
  const auto j = detail::bessel_table(gamma_norm, 2 * truncation);
  const int off = 2 * truncation;
  auto at = [&](int l) { return j[static_cast<std::size_t>(l + off)]; };
  Real sum = 0;
  for (int l = -truncation; l <= truncation; ++l) {
    if (l == 0) continue;
    for (int m = -truncation; m <= truncation; ++m) {
      if (m == 0) continue;
      sum += at(l) * at(m) * at(m - l) / Real(l * m);
    }
  }
  return -sum;
}

template <typename Real = double>
struct QResult {
  Real value = 0;
  int truncation = 0;
  Real doubling_change = 0;
  bool converged = false;
};

/// Doubles the truncation until consecutive values agree within tolerance,
/// giving up (converged = false) once L = 40 has been tested.
template <typename Real>
QResult<Real> q_gamma_checked(Real gamma_norm, int truncation = 20, Real tolerance = Real(1e-10)) {
  QResult<Real> r;
  r.truncation = truncation;
  r.value = q_gamma(gamma_norm, truncation);
  for (;;) {
    const Real doubled = q_gamma(gamma_norm, 2 * r.truncation);
    r.doubling_change = std::abs(doubled - r.value);
    r.converged = r.doubling_change < tolerance;
    if (r.converged || r.truncation >= 40) return r;
    r.truncation *= 2;
    r.value = doubled;
  }
}

/// Theta_n = K_n J0 - (Q / omega^2)(K_n K_{n+1}^2 - 2 K_n^3 + K_n K_{n-1}^2).
/// Bonds beyond the chain ends reuse the nearest defined hopping.
template <typename Real>
RVector<Real> effective_hopping(const LatticeConfig<Real>& config, Real gamma_norm, Real omega, int truncation = 20) {
  const auto& k = config.hopping;
  const auto bonds = k.size();
  RVector<Real> theta(bonds);
  if (bonds == 0) return theta;
  const Real j0 = bessel_j(0, gamma_norm);
  const Real q = q_gamma(gamma_norm, truncation) / (omega * omega);
  for (Eigen::Index i = 0; i < bonds; ++i) {
    const Real left = k(std::max<Eigen::Index>(i - 1, 0));
    const Real right = k(std::min<Eigen::Index>(i + 1, bonds - 1));
    const Real ki = k(i);
    theta(i) = ki * j0 - q * (ki * right * right - 2 * ki * ki * ki + ki * left * left);
  }
  return theta;
}

template <typename Real = double>
struct EffectiveRates {
  Real eta = 0;
  Real zeta = 0;
  Real alpha = 0;
  Real beta = 0;
  Real q = 0;
};

template <typename Real>
EffectiveRates<Real> named_rates(Real k, Real g, Real gamma_norm, Real omega, int truncation = 20) {
  if (!(k > 0) || !(g > 0)) throw std::invalid_argument("named_rates needs positive k and g");
  const Real j0 = bessel_j(0, gamma_norm);
  const Real q = q_gamma(gamma_norm, truncation);
  const Real c = q / (omega * omega) * (g * g - k * k);
  return {k * j0, g * j0, k * j0 - c * k, g * j0 + c * g, q};
}

/// Gamma at which beta(Gamma) = 0 inside the bracket (bisection).
template <typename Real>
Real beta_root(Real k, Real g, Real omega, std::pair<Real, Real> bracket = {Real(2.2), Real(2.6)},
               int truncation = 20) {
  auto beta = [&](Real x) { return named_rates(k, g, x, omega, truncation).beta; };
  Real lo = bracket.first, hi = bracket.second;
  Real f_lo = beta(lo), f_hi = beta(hi);
  if (f_lo == 0) return lo;
  if (f_hi == 0) return hi;
  if ((f_lo > 0) == (f_hi > 0))
    throw NumericalError("beta(Gamma) has no sign change in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  for (int it = 0; it < 200; ++it) {
    const Real mid = (lo + hi) / 2;
    if (mid <= lo || mid >= hi) break;
    const Real f_mid = beta(mid);
    if (f_mid == 0) return mid;
    if ((f_mid > 0) == (f_lo > 0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }
  const Real root = std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
  if (std::abs(beta(root)) >= Real(1e-12)) throw NumericalError("beta root did not reach |beta| < 1e-12");
  return root;
}

/// Second-order effective Hamiltonian: Theta_n bonds and -i gamma_n on the diagonal.
template <typename Real>
CMatrix<Real> effective_hamiltonian(const LatticeConfig<Real>& config, Real gamma_norm, Real omega,
                                    int truncation = 20) {
  const auto theta = effective_hopping(config, gamma_norm, omega, truncation);
  const int n = config.n_sites;
  CMatrix<Real> h = CMatrix<Real>::Zero(n, n);
  for (int i = 0; i < n; ++i) h(i, i) = Complex<Real>(0, -config.loss(i));
  for (int i = 0; i + 1 < n; ++i) h(i, i + 1) = h(i + 1, i) = theta(i);
  return h;
}

/// The (2M-1)-site chain left once the beta bonds vanish.
template <typename Real = double>
struct ReducedChain {
  int modes = 0;
  Real zeta = 0;
  Real gamma = 0;
  CMatrix<Real> matrix;
  /// Zero-energy eigenvector: (1, 0, -1, 0, 1, ...) / sqrt(M).
  CVector<Real> dark_state;
  /// Sorted by Im descending, then Re ascending.
  CVector<Real> eigenvalues;

  int dimension() const { return 2 * modes - 1; }
};

template <typename Real>
ReducedChain<Real> reduced_chain(int modes, Real zeta, Real gamma) {
  if (modes < 2) throw std::invalid_argument("reduced chain needs M >= 2");
  ReducedChain<Real> chain;
  chain.modes = modes;
  chain.zeta = zeta;
  chain.gamma = gamma;
  const int dim = 2 * modes - 1;
  chain.matrix = CMatrix<Real>::Zero(dim, dim);
  for (int i = 0; i + 1 < dim; ++i) chain.matrix(i, i + 1) = chain.matrix(i + 1, i) = zeta;
  for (int i = 1; i < dim; i += 2) chain.matrix(i, i) = Complex<Real>(0, -gamma);

  chain.dark_state = CVector<Real>::Zero(dim);
  for (int i = 0, sign = 1; i < dim; i += 2, sign = -sign) chain.dark_state(i) = Real(sign);
  chain.dark_state /= std::sqrt(Real(modes));

  Eigen::ComplexEigenSolver<CMatrix<Real>> solver(chain.matrix, false);
  if (solver.info() != Eigen::Success) throw NumericalError("reduced-chain eigen-decomposition failed");
  std::vector<Complex<Real>> values(solver.eigenvalues().data(), solver.eigenvalues().data() + dim);
  std::sort(values.begin(), values.end(), [](const auto& a, const auto& b) {
    if (a.imag() != b.imag()) return a.imag() > b.imag();
    return a.real() < b.real();
  });
  chain.eigenvalues = Eigen::Map<CVector<Real>>(values.data(), dim);
  return chain;
}

/// Closed-form eigenvalues of the five-site chain:
/// 0, -i gamma/2 +- sqrt(12 zeta^2 - gamma^2)/2, -i gamma/2 +- sqrt(4 zeta^2 - gamma^2)/2.
template <typename Real>
std::array<Complex<Real>, 5> pentamer_eigenvalues(Real zeta, Real gamma) {
  using C = Complex<Real>;
  const C center(0, -gamma / 2);
  const C outer = std::sqrt(C(12 * zeta * zeta - gamma * gamma, 0)) / Real(2);
  const C inner = std::sqrt(C((2 * zeta + gamma) * (2 * zeta - gamma), 0)) / Real(2);
  return {C(0, 0), center + outer, center - outer, center + inner, center - inner};
}

template <typename Real = double>
struct HfeComparison {
  Real gamma_norm = 0;
  Real omega = 0;
  int modes = 0;
  EffectiveRates<Real> rates;
  Real loss = 0;
  std::vector<Complex<Real>> exact_bic;
  std::vector<Complex<Real>> matched_reduced;
  std::vector<Real> residuals;
  Real max_residual = 0;
  bool has_dark = false;
  Complex<Real> exact_dark{};
  std::vector<Complex<Real>> reduced;
  /// Largest |Re eps| among extended modes vs the effective 2 |eta|.
  Real exact_band_half_width = 0;
  Real effective_band_half_width = 0;
};

/// Matches the exact BIC quasi-energies against the reduced-chain spectrum
/// (greedy nearest pairing) and compares continuum widths.
template <typename Real>
HfeComparison<Real> hfe_vs_exact(const LatticeConfig<Real>& config, const AnalyzeOptions<Real>& options = {},
                                 int truncation = 20) {
  HfeComparison<Real> report;
  report.gamma_norm = config.drive.gamma_norm();
  report.omega = config.drive.omega;
  const auto lossy = lossy_indices(config);
  report.modes = static_cast<int>(lossy.size()) + 1;
  report.loss = lossy.empty() ? Real(0) : config.loss(lossy.front());
  const Real k = config.n_sites > 1 ? config.hopping(0) : Real(0);
  const Real g = config.hopping(config.index_of(0));
  report.rates = named_rates(k, g, report.gamma_norm, report.omega, truncation);

  const auto spectrum = analyze(config, options);
  for (const auto& mode : spectrum.modes) {
    if (is_bic(mode.label)) report.exact_bic.push_back(mode.quasi_energy);
    if (mode.label == ModeLabel::dark_bic) {
      report.has_dark = true;
      report.exact_dark = mode.quasi_energy;
    }
    if (mode.label == ModeLabel::extended)
      report.exact_band_half_width = std::max(report.exact_band_half_width, std::abs(mode.quasi_energy.real()));
  }
  report.effective_band_half_width = 2 * std::abs(report.rates.eta);

  if (report.modes >= 2) {
    const auto chain = reduced_chain(report.modes, report.rates.zeta, report.loss);
    report.reduced.assign(chain.eigenvalues.data(), chain.eigenvalues.data() + chain.eigenvalues.size());
    std::vector<bool> used(report.reduced.size(), false);
    for (const auto& e : report.exact_bic) {
      std::size_t best = report.reduced.size();
      for (std::size_t j = 0; j < report.reduced.size(); ++j)
        if (!used[j] && (best == report.reduced.size() || std::abs(report.reduced[j] - e) < std::abs(report.reduced[best] - e)))
          best = j;
      if (best == report.reduced.size()) {
        report.matched_reduced.push_back(Complex<Real>(std::numeric_limits<Real>::quiet_NaN(), 0));
        report.residuals.push_back(std::numeric_limits<Real>::infinity());
        report.max_residual = std::numeric_limits<Real>::infinity();
        continue;
      }
      used[best] = true;
      report.matched_reduced.push_back(report.reduced[best]);
      report.residuals.push_back(std::abs(report.reduced[best] - e));
      report.max_residual = std::max(report.max_residual, report.residuals.back());
    }
  }
  return report;
}

}  // namespace fbic
