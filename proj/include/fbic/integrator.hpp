#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fbic/lattice.hpp"

namespace fbic {

enum class Frame { lab, rotating };

template <typename Real = double>
struct StateVector {
  CVector<Real> amplitudes;
  Real time = 0;
};

/// Sum_n |C_n|^2.
template <typename Derived>
auto norm(const Eigen::MatrixBase<Derived>& amplitudes) {
  return amplitudes.squaredNorm();
}

template <typename Real>
Real norm(const StateVector<Real>& state) {
  return state.amplitudes.squaredNorm();
}

template <typename Real = double>
struct EvolveOptions {
  int steps_per_period = 2048;
  Frame frame = Frame::rotating;
  /// Stored samples per drive period (the initial and final states are always kept).
  int samples_per_period = 1;
  /// Squared-norm growth above initial * (1 + tolerance) aborts the run.
  Real growth_tolerance = Real(1e-6);
};

/// Sampled solution of the amplitude equations, always in the lab frame.
template <typename Real = double>
struct Trajectory {
  std::vector<Real> times;
  std::vector<CVector<Real>> states;
  std::vector<Real> norms;
  /// Running leak probability 2 sum_n gamma_n int_0^t |C_n|^2 at each sample.
  std::vector<Real> leak;
  /// Per-site leak contributions 2 gamma_n int_0^t_final |C_n|^2.
  RVector<Real> site_leak;
  Real initial_norm = 0;
  Real step = 0;
  int steps_per_period = 0;
  Frame frame = Frame::rotating;

  StateVector<Real> final_state() const { return {states.back(), times.back()}; }
  Real final_norm() const { return norms.back(); }
  std::size_t size() const { return times.size(); }

  /// Index of the sample taken at time t, or -1.
  int sample_at(Real t) const {
    const Real tol = Real(1e-9) * std::max(Real(1), std::abs(t));
    for (std::size_t i = 0; i < times.size(); ++i)
      if (std::abs(times[i] - t) <= tol) return static_cast<int>(i);
    return -1;
  }
};

namespace detail {

// Right-hand side dC/dt = -i H C + i U |C|^2 C for a block of column states.
template <typename Real>
class AmplitudeRhs {
 public:
  using C = Complex<Real>;
  using Block = CMatrix<Real>;

  AmplitudeRhs(const LatticeConfig<Real>& config, Frame frame) : config_(config), frame_(frame) {
    const int n = config.n_sites;
    neg_i_hop_ = (C(0, -1) * config.hopping.template cast<C>()).eval();
    neg_loss_ = (-config.loss).template cast<C>();
    sites_ = RVector<Real>(n);
    for (int i = 0; i < n; ++i) sites_(i) = Real(config.site_of(i));
    nonlinear_ = !config.is_linear();
    if (nonlinear_) i_u_ = (C(0, 1) * config.nonlinearity.template cast<C>()).eval();
    periodic_ = config.boundary == Boundary::periodic && n > 2;
  }

  template <typename In, typename Out>
  void operator()(Real t, const Eigen::MatrixBase<In>& y, Eigen::MatrixBase<Out>& out) {
    const int n = config_.n_sites;
    const Drive<Real>& d = config_.drive;
    C up(1), down(1), wrap(1);
    if (frame_ == Frame::rotating) {
      const Real phase = d.gamma_norm() * std::sin(d.omega * t);
      up = std::polar(Real(1), -phase);
      down = std::conj(up);
      wrap = std::polar(Real(1), phase * Real(n - 1));
      out.noalias() = neg_loss_.asDiagonal() * y;
    } else {
      const Real force = d.f0 * d.lattice_constant * std::cos(d.omega * t);
      diag_ = neg_loss_ + (C(0, -force) * sites_.template cast<C>());
      out.noalias() = diag_.asDiagonal() * y;
    }
    if (n > 1) {
      scaled_ = neg_i_hop_ * up;
      out.topRows(n - 1).noalias() += scaled_.asDiagonal() * y.bottomRows(n - 1);
      scaled_ = neg_i_hop_ * down;
      out.bottomRows(n - 1).noalias() += scaled_.asDiagonal() * y.topRows(n - 1);
    }
    if (periodic_) {
      out.row(n - 1) += (neg_i_hop_(0) * wrap) * y.row(0);
      out.row(0) += (neg_i_hop_(0) * std::conj(wrap)) * y.row(n - 1);
    }
    if (nonlinear_) {
      for (Eigen::Index c = 0; c < y.cols(); ++c)
        out.col(c).array() += i_u_.array() * y.col(c).array().abs2().template cast<C>() * y.col(c).array();
    }
  }

 private:
  const LatticeConfig<Real>& config_;
  Frame frame_;
  CVector<Real> neg_i_hop_, neg_loss_, i_u_, diag_, scaled_;
  RVector<Real> sites_;
  bool nonlinear_ = false;
  bool periodic_ = false;
};

// Classical fourth-order Runge-Kutta with preallocated stage buffers.
template <typename Real>
class Rk4 {
 public:
  Rk4(const LatticeConfig<Real>& config, Frame frame) : rhs_(config, frame) {}

  // When `weighted_density` is given, it receives (h/6) sum_s w_s |C(stage s)|^2 for
  // column 0, i.e. the same fourth-order rule applied to d/dt int |C_n|^2 dt.
  void step(Real t, Real h, CMatrix<Real>& y, RVector<Real>* weighted_density = nullptr) {
    if (k1_.rows() != y.rows() || k1_.cols() != y.cols()) {
      k1_.resize(y.rows(), y.cols());
      k2_.resizeLike(k1_);
      k3_.resizeLike(k1_);
      k4_.resizeLike(k1_);
      tmp_.resizeLike(k1_);
    }
    auto accumulate = [&](const CMatrix<Real>& stage, Real weight) {
      if (weighted_density) *weighted_density += (weight * h / 6) * stage.col(0).cwiseAbs2();
    };
    if (weighted_density) weighted_density->setZero(y.rows());
    accumulate(y, 1);
    rhs_(t, y, k1_);
    tmp_ = y + (h / 2) * k1_;
    accumulate(tmp_, 2);
    rhs_(t + h / 2, tmp_, k2_);
    tmp_ = y + (h / 2) * k2_;
    accumulate(tmp_, 2);
    rhs_(t + h / 2, tmp_, k3_);
    tmp_ = y + h * k3_;
    accumulate(tmp_, 1);
    rhs_(t + h, tmp_, k4_);
    y += (h / 6) * (k1_ + 2 * k2_ + 2 * k3_ + k4_);
  }

 private:
  AmplitudeRhs<Real> rhs_;
  CMatrix<Real> k1_, k2_, k3_, k4_, tmp_;
};

// Site-local phase exp(sign * i Gamma sin(omega t) n) linking lab and rotating amplitudes.
template <typename Real>
void apply_frame_phase(const LatticeConfig<Real>& config, Real t, int sign, CMatrix<Real>& y) {
  const Real phase = config.drive.gamma_norm() * std::sin(config.drive.omega * t);
  if (phase == Real(0)) return;
  for (int i = 0; i < config.n_sites; ++i)
    y.row(i) *= std::polar(Real(1), Real(sign) * phase * Real(config.site_of(i)));
}

}  // namespace detail

/// Integrates i dC/dt = H(t) C - U |C|^2 C from initial.time to t_final on a
/// uniform grid of about steps_per_period steps per drive period. The leak
/// probability 2 sum_n gamma_n int |C_n|^2 dt is integrated alongside the
/// amplitudes with the same Runge-Kutta stages. The stage amplitudes are
/// rotating-frame ones, but |C_n|^2 is frame independent.
template <typename Real>
Trajectory<Real> evolve(const LatticeConfig<Real>& config, const StateVector<Real>& initial, Real t_final,
                        const EvolveOptions<Real>& options = {}) {
  config.validate();
  if (initial.amplitudes.size() != config.n_sites)
    throw std::invalid_argument("initial state has " + std::to_string(initial.amplitudes.size()) +
                                " amplitudes, lattice has " + std::to_string(config.n_sites) + " sites");
  if (!initial.amplitudes.allFinite()) throw std::invalid_argument("initial state has non-finite amplitudes");
  if (options.steps_per_period < 64) throw std::invalid_argument("steps_per_period must be at least 64");
  if (options.samples_per_period < 1) throw std::invalid_argument("samples_per_period must be positive");
  if (!(t_final >= initial.time)) throw std::invalid_argument("t_final precedes the initial time");

  const Real t0 = initial.time;
  const Real base_step = config.drive.period() / Real(options.steps_per_period);
  const Real span = t_final - t0;
  const long n_steps = span > 0 ? std::max<long>(1, static_cast<long>(std::ceil(span / base_step - Real(1e-9)))) : 0;
  const Real h = n_steps ? span / Real(n_steps) : base_step;
  const long stride = std::max<long>(1, options.steps_per_period / options.samples_per_period);

  Trajectory<Real> traj;
  traj.step = h;
  traj.steps_per_period = options.steps_per_period;
  traj.frame = options.frame;
  traj.initial_norm = initial.amplitudes.squaredNorm();
  traj.site_leak = RVector<Real>::Zero(config.n_sites);

  CMatrix<Real> y = initial.amplitudes;
  const bool rotating = options.frame == Frame::rotating;
  if (rotating) detail::apply_frame_phase(config, t0, +1, y);

  auto record = [&](Real t, Real leak) {
    CMatrix<Real> lab = y;
    if (rotating) detail::apply_frame_phase(config, t, -1, lab);
    traj.times.push_back(t);
    traj.states.push_back(lab.col(0));
    traj.norms.push_back(y.squaredNorm());
    traj.leak.push_back(leak);
  };

  const Real limit = traj.initial_norm * (1 + options.growth_tolerance);
  detail::Rk4<Real> rk4(config, options.frame);
  RVector<Real> weighted_density(config.n_sites);
  Real leak = 0;
  record(t0, leak);
  for (long s = 0; s < n_steps; ++s) {
    const Real t = t0 + Real(s) * h;
    rk4.step(t, h, y, &weighted_density);
    const Real squared_norm = y.squaredNorm();
    if (!std::isfinite(squared_norm) || squared_norm > limit)
      throw NumericalError("step size too large: squared norm grew from " + std::to_string(traj.initial_norm) +
                           " to " + std::to_string(squared_norm) + " at t = " + std::to_string(t + h) +
                           " (steps_per_period = " + std::to_string(options.steps_per_period) + ")");
    const RVector<Real> site_increment = 2 * config.loss.cwiseProduct(weighted_density);
    traj.site_leak += site_increment;
    leak += site_increment.sum();
    const Real t_next = (s + 1 == n_steps) ? t_final : t0 + Real(s + 1) * h;
    if ((s + 1) % stride == 0 || s + 1 == n_steps) record(t_next, leak);
  }
  return traj;
}

/// Same integration as evolve; spelled out for call sites that drive a non-zero U_n.
template <typename Real>
Trajectory<Real> evolve_nonlinear(const LatticeConfig<Real>& config, const StateVector<Real>& initial, Real t_final,
                                  const EvolveOptions<Real>& options = {}) {
  return evolve(config, initial, t_final, options);
}

/// P(t), linearly interpolated between stored samples.
template <typename Real>
Real decay_probability(const Trajectory<Real>& traj, Real t) {
  if (traj.times.empty()) throw std::invalid_argument("empty trajectory");
  const Real tol = Real(1e-9) * std::max(Real(1), std::abs(t));
  if (t < traj.times.front() - tol || t > traj.times.back() + tol)
    throw std::out_of_range("time " + std::to_string(t) + " outside trajectory range [" +
                            std::to_string(traj.times.front()) + ", " + std::to_string(traj.times.back()) + "]");
  const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t);
  if (it == traj.times.end()) return traj.leak.back();
  const auto i = static_cast<std::size_t>(it - traj.times.begin());
  if (i == 0 || std::abs(*it - t) <= tol) return traj.leak[i];
  const Real w = (t - traj.times[i - 1]) / (traj.times[i] - traj.times[i - 1]);
  return (1 - w) * traj.leak[i - 1] + w * traj.leak[i];
}

template <typename Real = double>
struct ConvergenceReport {
  Real max_amplitude_shift = 0;
  Real tolerance = 0;
  int steps_per_period = 0;
  bool passed = false;
};

/// Re-runs at twice the step density and compares final lab-frame amplitudes.
template <typename Real>
ConvergenceReport<Real> check_step_convergence(const LatticeConfig<Real>& config, const StateVector<Real>& initial,
                                               Real t_final, EvolveOptions<Real> options = {},
                                               Real tolerance = Real(1e-9)) {
  const auto coarse = evolve(config, initial, t_final, options);
  options.steps_per_period *= 2;
  const auto fine = evolve(config, initial, t_final, options);
  ConvergenceReport<Real> report;
  report.max_amplitude_shift = (coarse.states.back() - fine.states.back()).cwiseAbs().maxCoeff();
  report.tolerance = tolerance;
  report.steps_per_period = options.steps_per_period / 2;
  report.passed = report.max_amplitude_shift < tolerance;
  return report;
}

}  // namespace fbic
