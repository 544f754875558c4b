#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fbic {

namespace detail {

template <typename Real>
Real bessel_series(int order, Real x) {
  const Real half = x / 2;
  Real term = 1;
  for (int k = 1; k <= order; ++k) term *= half / Real(k);
  Real sum = term;
  const Real q = -half * half;
  for (int m = 1; m < 500; ++m) {
    term *= q / (Real(m) * Real(m + order));
    sum += term;
    if (std::abs(term) <= std::numeric_limits<Real>::epsilon() * std::abs(sum)) break;
  }
  return sum;
}

// Miller's backward recurrence normalised with J_0 + 2 sum_k J_2k = 1.
template <typename Real>
Real bessel_miller(int order, Real x) {
  const int reach = std::max(order, static_cast<int>(std::ceil(x)));
  const int start = 2 * ((reach + 30 + static_cast<int>(std::sqrt(60.0 * (reach + 1)))) / 2);
  const Real rescale = Real(1e10);
  Real next = 0, current = 1, even_sum = 0, result = 0;
  bool even = false;
  for (int j = start; j > 0; --j) {
    const Real prev = Real(2 * j) / x * current - next;
    next = current;
    current = prev;
    if (std::abs(current) > rescale) {
      current /= rescale;
      next /= rescale;
      result /= rescale;
      even_sum /= rescale;
    }
    if (even) even_sum += current;
    even = !even;
    if (j == order) result = next;
  }
  if (order == 0) result = current;
  return result / (2 * even_sum - current);
}

}  // namespace detail

/// Integer-order Bessel function of the first kind for |order| <= 60, 0 <= x <= 30.
template <typename Real>
Real bessel_j(int order, Real x) {
  if (std::abs(order) > 60) throw std::domain_error("bessel_j: |order| > 60 (" + std::to_string(order) + ")");
  if (!(x >= 0 && x <= 30)) throw std::domain_error("bessel_j: argument outside [0, 30]");
  const int l = std::abs(order);
  const Real sign = (order < 0 && l % 2 == 1) ? Real(-1) : Real(1);
  if (x == 0) return l == 0 ? Real(1) : Real(0);
  const Real value = (x <= 2 || x * x < Real(l + 1)) ? detail::bessel_series(l, x) : detail::bessel_miller(l, x);
  return sign * value;
}

/// First positive zero of J_0, located by bisection on bessel_j.
template <typename Real>
Real j0_first_zero() {
  Real lo = 2, hi = 3;
  for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<Real>::epsilon(); ++it) {
    const Real mid = (lo + hi) / 2;
    (bessel_j(0, mid) > 0 ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

}  // namespace fbic
