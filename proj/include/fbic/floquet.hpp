#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "fbic/bessel.hpp"
#include "fbic/integrator.hpp"
#include "fbic/lattice.hpp"
#include "fbic/parallel.hpp"

namespace fbic {

enum class ModeLabel { extended, bic, boc, dark_bic };

inline const char* to_string(ModeLabel label) {
  switch (label) {
    case ModeLabel::extended: return "extended";
    case ModeLabel::bic: return "BIC";
    case ModeLabel::boc: return "BOC";
    case ModeLabel::dark_bic: return "dark_BIC";
  }
  return "?";
}

inline bool is_bic(ModeLabel label) { return label == ModeLabel::bic || label == ModeLabel::dark_bic; }

template <typename Real = double>
struct FloquetMode {
  Complex<Real> quasi_energy;
  /// Mode at t = 0, unit norm, largest entry real positive.
  CVector<Real> profile;
  Real ipr = 0;
  /// Weight of the profile on lossy sites (filled in by classify).
  Real lossy_population = 0;
  ModeLabel label = ModeLabel::extended;
  int mode_index = 0;
};

/// Real quasi-energy window treated as the scattering continuum.
template <typename Real = double>
struct Band {
  Real lower = 0;
  Real upper = 0;
  Real margin = 0;
  bool contains(Real e) const { return e >= lower && e <= upper; }
};

template <typename Real = double>
struct BandOptions {
  /// Margin as a fraction of the effective half-width 2 k |J0(Gamma)|.
  Real relative_margin = Real(0.05);
  Real absolute_margin = 0;
};

template <typename Real = double>
struct ClassifyOptions {
  Real ipr_threshold = Real(0.1);
  /// |Re eps| bound for the dark mode; non-positive means 1e-3 * omega.
  Real dark_tol = 0;
  Real pop_tol = Real(1e-2);
};

template <typename Real = double>
struct SpectrumResult {
  std::vector<FloquetMode<Real>> modes;
  Real omega = 1;
  Band<Real> band;
  ClassifyOptions<Real> thresholds;
  bool classified = false;

  int count(ModeLabel label) const {
    return static_cast<int>(std::count_if(modes.begin(), modes.end(), [&](const auto& m) { return m.label == label; }));
  }
  /// BIC count including the dark one.
  int bic_count() const { return count(ModeLabel::bic) + count(ModeLabel::dark_bic); }

  std::optional<std::size_t> dark_index() const {
    for (std::size_t i = 0; i < modes.size(); ++i)
      if (modes[i].label == ModeLabel::dark_bic) return i;
    return std::nullopt;
  }
  const FloquetMode<Real>* dark_mode() const {
    const auto i = dark_index();
    return i ? &modes[*i] : nullptr;
  }
};

/// Sum |C|^4 / (Sum |C|^2)^2.
template <typename Derived>
typename Derived::RealScalar ipr(const Eigen::MatrixBase<Derived>& profile) {
  using Real = typename Derived::RealScalar;
  const auto weights = profile.cwiseAbs2().eval();
  const Real total = weights.sum();
  if (!(total > 0)) throw std::invalid_argument("ipr of a zero vector");
  return weights.squaredNorm() / (total * total);
}

template <typename Real = double>
struct MonodromyOptions {
  int steps_per_period = 2048;
  int jobs = 1;
};

/// One-period propagator U(T, 0), built column-wise in the rotating frame
/// (the frame change is the identity at t = 0 and t = T).
template <typename Real>
CMatrix<Real> monodromy(const LatticeConfig<Real>& config, const MonodromyOptions<Real>& options = {}) {
  config.validate();
  if (!config.is_linear()) throw std::invalid_argument("monodromy requires a linear model (all U_n = 0)");
  if (options.steps_per_period < 64) throw std::invalid_argument("steps_per_period must be at least 64");
  const int n = config.n_sites;
  const Real h = config.drive.period() / Real(options.steps_per_period);
  CMatrix<Real> result(n, n);

  const int chunks = std::clamp(options.jobs, 1, n);
  parallel_for(static_cast<std::size_t>(chunks), chunks, [&](std::size_t chunk) {
    const int first = static_cast<int>(chunk) * n / chunks;
    const int last = static_cast<int>(chunk + 1) * n / chunks;
    CMatrix<Real> block = CMatrix<Real>::Identity(n, n).middleCols(first, last - first);
    detail::Rk4<Real> rk4(config, Frame::rotating);
    for (int s = 0; s < options.steps_per_period; ++s) rk4.step(Real(s) * h, h, block);
    result.middleCols(first, last - first) = block;
  });
  return result;
}

namespace detail {

template <typename Real>
Complex<Real> quasi_energy_from(const Complex<Real>& multiplier, Real omega) {
  const Real period = 2 * pi<Real> / omega;
  Real re = -std::arg(multiplier) / period;
  if (re <= -omega / 2) re += omega;
  return {re, std::log(std::abs(multiplier)) / period};
}

}  // namespace detail

/// Eigen-decomposes the monodromy: eps = (i/T) Log(lambda) with the principal
/// branch, so Re eps lies in (-omega/2, omega/2] and Im eps = ln|lambda| / T.
/// Modes come back sorted by (Re eps, -Im eps, IPR) and unclassified.
template <typename Real>
SpectrumResult<Real> floquet_spectrum(const CMatrix<Real>& propagator, Real omega) {
  if (propagator.rows() != propagator.cols()) throw std::invalid_argument("monodromy must be square");
  if (!(omega > 0)) throw std::invalid_argument("omega must be positive");
  Eigen::ComplexEigenSolver<CMatrix<Real>> solver(propagator, true);
  if (solver.info() != Eigen::Success) {
    Eigen::JacobiSVD<CMatrix<Real>> svd(propagator);
    const auto& s = svd.singularValues();
    std::ostringstream msg;
    msg << "eigen-decomposition of the monodromy failed (condition estimate "
        << s(0) / s(s.size() - 1) << ")";
    throw NumericalError(msg.str());
  }

  SpectrumResult<Real> result;
  result.omega = omega;
  const auto n = propagator.rows();
  result.modes.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    FloquetMode<Real> mode;
    mode.quasi_energy = detail::quasi_energy_from(solver.eigenvalues()(j), omega);
    CVector<Real> v = solver.eigenvectors().col(j);
    v.normalize();
    Eigen::Index peak = 0;
    v.cwiseAbs().maxCoeff(&peak);
    v *= std::conj(v(peak)) / std::abs(v(peak));
    mode.ipr = ipr(v);
    mode.profile = std::move(v);
    result.modes.push_back(std::move(mode));
  }
  std::sort(result.modes.begin(), result.modes.end(), [](const auto& a, const auto& b) {
    if (a.quasi_energy.real() != b.quasi_energy.real()) return a.quasi_energy.real() < b.quasi_energy.real();
    if (a.quasi_energy.imag() != b.quasi_energy.imag()) return a.quasi_energy.imag() > b.quasi_energy.imag();
    return a.ipr < b.ipr;
  });
  for (std::size_t i = 0; i < result.modes.size(); ++i) result.modes[i].mode_index = static_cast<int>(i);
  return result;
}

/// [-2k|J0(Gamma)| - delta, 2k|J0(Gamma)| + delta] with k the bulk (edge) hopping.
template <typename Real>
Band<Real> continuum_band(const LatticeConfig<Real>& config, Real gamma_norm, const BandOptions<Real>& options = {}) {
  const Real k = config.n_sites > 1 ? std::abs(config.hopping(0)) : Real(0);
  const Real half_width = 2 * k * std::abs(bessel_j(0, gamma_norm));
  const Real margin = options.relative_margin * half_width + options.absolute_margin;
  return {-half_width - margin, half_width + margin, margin};
}

/// Labels localized modes (IPR >= threshold) as BIC inside the band and BOC
/// outside it. The BIC with the smallest |Im eps| becomes the dark BIC when it
/// also sits at Re eps ~ 0 with negligible weight on the lossy sites.
template <typename Real>
SpectrumResult<Real> classify(SpectrumResult<Real> spectrum, const LatticeConfig<Real>& config, const Band<Real>& band,
                              ClassifyOptions<Real> options = {}) {
  if (options.dark_tol <= 0) options.dark_tol = Real(1e-3) * spectrum.omega;
  const auto lossy = lossy_indices(config);
  std::optional<std::size_t> darkest;
  for (std::size_t i = 0; i < spectrum.modes.size(); ++i) {
    auto& mode = spectrum.modes[i];
    if (mode.profile.size() != config.n_sites) throw std::invalid_argument("spectrum does not match lattice size");
    mode.lossy_population = 0;
    for (int site : lossy) mode.lossy_population += std::norm(mode.profile(site));
    if (mode.ipr >= options.ipr_threshold) {
      mode.label = band.contains(mode.quasi_energy.real()) ? ModeLabel::bic : ModeLabel::boc;
    } else {
      mode.label = ModeLabel::extended;
    }
    if (mode.label == ModeLabel::bic &&
        (!darkest || std::abs(mode.quasi_energy.imag()) < std::abs(spectrum.modes[*darkest].quasi_energy.imag())))
      darkest = i;
  }
  if (darkest) {
    auto& mode = spectrum.modes[*darkest];
    if (std::abs(mode.quasi_energy.real()) < options.dark_tol && mode.lossy_population < options.pop_tol)
      mode.label = ModeLabel::dark_bic;
  }
  spectrum.band = band;
  spectrum.thresholds = options;
  spectrum.classified = true;
  return spectrum;
}

template <typename Real = double>
struct AnalyzeOptions {
  MonodromyOptions<Real> monodromy;
  BandOptions<Real> band;
  ClassifyOptions<Real> classify;
};

/// Monodromy, spectrum and classification for one parameter point.
template <typename Real>
SpectrumResult<Real> analyze(const LatticeConfig<Real>& config, const AnalyzeOptions<Real>& options = {}) {
  const auto propagator = monodromy(config, options.monodromy);
  auto spectrum = floquet_spectrum(propagator, config.drive.omega);
  const auto band = continuum_band(config, config.drive.gamma_norm(), options.band);
  return classify(std::move(spectrum), config, band, options.classify);
}

/// Im eps of the dark BIC for each loss rate of a config family.
template <typename Real>
std::vector<Real> dark_bic_imag_trend(const std::function<LatticeConfig<Real>(Real)>& family,
                                      const std::vector<Real>& loss_rates, const AnalyzeOptions<Real>& options = {}) {
  std::vector<Real> out;
  out.reserve(loss_rates.size());
  for (Real gamma : loss_rates) {
    const auto spectrum = analyze(family(gamma), options);
    const auto* dark = spectrum.dark_mode();
    if (!dark) throw NumericalError("no dark BIC found at gamma = " + std::to_string(gamma));
    out.push_back(dark->quasi_energy.imag());
  }
  return out;
}

}  // namespace fbic
