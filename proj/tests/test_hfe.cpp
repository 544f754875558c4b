#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "fbic/hfe.hpp"

using namespace fbic;

namespace {

constexpr double k0 = 0.3, g0 = 0.21;

double oracle_j(int l, double x) {
  const double v = std::cyl_bessel_j(static_cast<double>(std::abs(l)), x);
  return (l < 0 && l % 2) ? -v : v;
}

// Direct double sum with the standard library Bessel functions.
double oracle_q(double x, int truncation) {
  long double sum = 0;
  for (int l = -truncation; l <= truncation; ++l)
    for (int j = -truncation; j <= truncation; ++j)
      if (l && j) sum += static_cast<long double>(oracle_j(l, x)) * oracle_j(j, x) * oracle_j(j - l, x) / (l * j);
  return static_cast<double>(-sum);
}

CMatrix<double> oracle_harmonic(const RVector<double>& hop, double x, int l) {
  const auto n = hop.size() + 1;
  CMatrix<double> h = CMatrix<double>::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    h(i, i + 1) = hop(i) * oracle_j(-l, x);
    h(i + 1, i) = hop(i) * oracle_j(l, x);
  }
  return h;
}

CMatrix<double> comm(const CMatrix<double>& a, const CMatrix<double>& b) { return a * b - b * a; }

LatticeConfig<double> defect(double gamma_norm, double gamma, double omega) {
  return defect_profile(101, k0, g0, gamma, Drive<double>::from_gamma_norm(gamma_norm, omega));
}

}  // namespace

TEST_CASE("Q(Gamma)") {
  CHECK(q_gamma(0.0) == 0.0);
  CHECK(std::abs(q_gamma(2.4, 10) - q_gamma(2.4, 20)) < 1e-10);
  SUBCASE("brute-force double sum at L = 40") {
    for (double x : {0.7, 1.8, 2.4048, 2.4308, 3.5}) CHECK(std::abs(q_gamma(x, 40) - oracle_q(x, 40)) < 1e-12);
    CHECK(q_gamma(2.4048) == doctest::Approx(oracle_q(2.4048, 40)).epsilon(1e-12));
    CHECK(q_gamma(2.4048) == doctest::Approx(-0.30200110).epsilon(1e-7));
  }
  SUBCASE("consistent with the shift of the beta root") {
    // beta = 0 with J0(G*) ~ -J1(G0)(G* - G0) gives Q ~ (G* - G0) omega^2 J1(G0) / (g^2 - k^2).
    const double omega = 10, x0 = j0_first_zero<double>();
    const double root = beta_root(k0, g0, omega);
    const double estimate = (root - x0) * omega * omega * oracle_j(1, x0) / (g0 * g0 - k0 * k0);
    CHECK(estimate == doctest::Approx(q_gamma(x0)).epsilon(1e-2));
  }
  SUBCASE("doubling check") {
    const auto r = q_gamma_checked(2.4308);
    CHECK(r.converged);
    CHECK(r.doubling_change < 1e-10);
    CHECK_THROWS_AS(q_gamma(1.0, 9), std::invalid_argument);
  }
}

TEST_CASE("rotating-frame harmonics") {
  const auto c = defect_profile(21, k0, g0, 1.0);
  const auto model = rotating_frame_model(c, 2.4308, 20);
  for (int l = 1; l <= 20; ++l)
    CHECK(std::abs(model.weight(-l) - ((l % 2) ? -model.weight(l) : model.weight(l))) < 1e-12);
  for (int l = -6; l <= 6; ++l) {
    CMatrix<double> expected = oracle_harmonic(c.hopping, 2.4308, l);
    if (l == 0) expected.diagonal() = Complex<double>(0, -1) * c.loss.cast<Complex<double>>();
    CHECK((model.harmonic(l) - expected).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("first-order term vanishes: sum_l [H_l, H_-l] / l = 0") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const double k = 0.1 + u(rng), g = 0.1 + u(rng), x = 4 * u(rng);
    const auto c = defect_profile(11, k, g, u(rng));
    const auto model = rotating_frame_model(c, x, 20);
    CMatrix<double> sum = CMatrix<double>::Zero(11, 11);
    for (int l = 1; l <= 20; ++l) sum += (comm(model.harmonic(l), model.harmonic(-l)) - comm(model.harmonic(-l), model.harmonic(l))) / l;
    CHECK(sum.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("second-order bracket against nested commutators at the J0 zero") {
  // With J0 = 0 and no loss H'_0 vanishes and the second-order term reduces to
  // sum_{l, l' != 0, l' != l} [H_{-l'}, [H_{l'-l}, H_l]] / (3 l l').
  const double x = j0_first_zero<double>();
  const int L = 14;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.1, 0.5);
  RVector<double> hop = RVector<double>::NullaryExpr(8, [&] { return u(rng); });
  const auto c = make_lattice<double>(hop, RVector<double>::Zero(9), Drive<double>::from_gamma_norm(x, 1.0));
  std::vector<CMatrix<double>> h;
  for (int l = -2 * L; l <= 2 * L; ++l) h.push_back(oracle_harmonic(hop, x, l));
  auto at = [&](int l) -> const CMatrix<double>& { return h[static_cast<std::size_t>(l + 2 * L)]; };
  CMatrix<double> second = CMatrix<double>::Zero(9, 9);
  for (int l = -L; l <= L; ++l)
    for (int lp = -L; lp <= L; ++lp)
      if (l && lp && lp != l) second += comm(at(-lp), comm(at(lp - l), at(l))) / (3.0 * l * lp);

  const auto theta = effective_hopping(c, x, 1.0);
  for (int i = 1; i + 2 < 9; ++i) {
    CHECK(second(i, i + 1).real() == doctest::Approx(theta(i)).epsilon(1e-6));
    CHECK(second(i + 1, i).real() == doctest::Approx(theta(i)).epsilon(1e-6));
  }
  for (int i = 0; i < 9; ++i) {
    CHECK(std::abs(second(i, i)) < 1e-12);
    if (i + 2 < 9) CHECK(std::abs(second(i, i + 2)) < 1e-12);
  }
}

TEST_CASE("effective hopping") {
  SUBCASE("uniform lattice has no second-order shift") {
    for (double x : {0.5, 1.8, 3.1}) {
      const auto c = uniform_profile(21, k0, Drive<double>::from_gamma_norm(x, 1.0));
      const auto theta = effective_hopping(c, x, 1.0);
      CHECK((theta.array() - k0 * bessel_j(0, x)).abs().maxCoeff() < 1e-15);
    }
    const auto c = uniform_profile(21, k0, {});
    CHECK(effective_hopping(c, j0_first_zero<double>(), 1.0).cwiseAbs().maxCoeff() < 1e-16);
  }
  SUBCASE("defect interfaces carry alpha and beta") {
    const double x = 2.2, omega = 1.5;
    const auto c = defect_profile(21, k0, g0, 1.0);
    const auto theta = effective_hopping(c, x, omega);
    const auto r = named_rates(k0, g0, x, omega);
    CHECK(theta(c.index_of(2)) == doctest::Approx(r.beta).epsilon(1e-14));
    CHECK(theta(c.index_of(-3)) == doctest::Approx(r.beta).epsilon(1e-14));
    CHECK(theta(c.index_of(3)) == doctest::Approx(r.alpha).epsilon(1e-14));
    CHECK(theta(c.index_of(-4)) == doctest::Approx(r.alpha).epsilon(1e-14));
    CHECK(theta(c.index_of(0)) == doctest::Approx(r.zeta).epsilon(1e-14));
    CHECK(theta(c.index_of(8)) == doctest::Approx(r.eta).epsilon(1e-14));
  }
}

TEST_CASE("named rates") {
  const double x = 2.0, omega = 2.0;
  SUBCASE("g = k") {
    const auto r = named_rates(k0, k0, x, omega);
    CHECK(r.alpha == doctest::Approx(r.eta));
    CHECK(r.beta == doctest::Approx(r.zeta));
  }
  SUBCASE("at the J0 zero") {
    const double x0 = j0_first_zero<double>();
    const auto r = named_rates(k0, g0, x0, omega);
    const double c = r.q / (omega * omega) * (g0 * g0 - k0 * k0);
    CHECK(std::abs(r.eta) < 1e-16);
    CHECK(std::abs(r.zeta) < 1e-16);
    CHECK(r.alpha == doctest::Approx(-c * k0));
    CHECK(r.beta == doctest::Approx(c * g0));
  }
  CHECK(std::abs(named_rates(k0, g0, 2.4308, 1.0).beta) < 1e-4);
  CHECK_THROWS_AS(named_rates(0.0, g0, x, omega), std::invalid_argument);
}

TEST_CASE("beta root") {
  CHECK(std::abs(beta_root(k0, g0, 1.0) - 2.4308) < 2e-3);
  CHECK(std::abs(beta_root(k0, g0, 10.0) - 2.40509) < 5e-4);
  CHECK(std::abs(named_rates(k0, g0, beta_root(k0, g0, 3.0), 3.0).beta) < 1e-12);
  CHECK_THROWS_AS(beta_root(k0, g0, 1.0, {2.5, 2.6}), NumericalError);

  SUBCASE("offset from the J0 zero scales as 1 / omega^2") {
    const double x0 = j0_first_zero<double>();
    const double omegas[] = {5, 10, 20};
    for (double a : omegas)
      for (double b : omegas) {
        if (a >= b) continue;
        const double ratio = (beta_root(k0, g0, a) - x0) / (beta_root(k0, g0, b) - x0);
        CHECK(ratio == doctest::Approx((b / a) * (b / a)).epsilon(0.05));
      }
    // The two quoted roots (omega = 1 and 10) obey the same slope.
    CHECK((2.4308 - x0) / (2.40509 - x0) == doctest::Approx(100.0).epsilon(0.05));
    const double far = (beta_root(k0, g0, 200.0) - x0) * 200.0 * 200.0;
    CHECK(far == doctest::Approx((beta_root(k0, g0, 20.0) - x0) * 20.0 * 20.0).epsilon(0.01));
  }
}

TEST_CASE("effective Hamiltonian") {
  SUBCASE("undriven uniform chain") {
    const auto c = uniform_profile(9, k0, {});
    const auto h = effective_hamiltonian(c, 0.0, 1.0);
    CHECK((h - hamiltonian_at(c, 0.0)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("the beta bonds vanish at the root and isolate the pentamer") {
    const double omega = 1.0, gamma = 0.8, x = beta_root(k0, g0, omega);
    const auto c = defect(x, gamma, omega);
    const auto h = effective_hamiltonian(c, x, omega);
    const int lo = c.index_of(-2), hi = c.index_of(2);
    CHECK(std::abs(h(lo - 1, lo)) < 1e-12);
    CHECK(std::abs(h(hi, hi + 1)) < 1e-12);

    Eigen::ComplexEigenSolver<CMatrix<double>> block(h.block(lo, lo, 5, 5), false);
    const auto zeta = named_rates(k0, g0, x, omega).zeta;
    for (const auto& e : pentamer_eigenvalues(zeta, gamma)) {
      double nearest = 1e300;
      for (int i = 0; i < 5; ++i) nearest = std::min(nearest, std::abs(block.eigenvalues()(i) - e));
      CHECK(nearest < 1e-12);
    }
  }
}

TEST_CASE("reduced chain") {
  SUBCASE("M = 3, zeta = 1, gamma = 0") {
    const auto chain = reduced_chain(3, 1.0, 0.0);
    std::vector<double> re;
    for (int i = 0; i < 5; ++i) {
      CHECK(std::abs(chain.eigenvalues(i).imag()) < 1e-12);
      re.push_back(chain.eigenvalues(i).real());
    }
    std::sort(re.begin(), re.end());
    const double expected[] = {-std::sqrt(3.0), -1, 0, 1, std::sqrt(3.0)};
    for (int i = 0; i < 5; ++i) CHECK(re[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  }
  SUBCASE("M = 3 eigenvalues match the closed form") {
    for (auto [zeta, gamma] : {std::pair{0.05, 1.0}, std::pair{0.3, 0.2}, std::pair{0.01, 30.0}}) {
      const auto chain = reduced_chain(3, zeta, gamma);
      const auto closed = pentamer_eigenvalues(zeta, gamma);
      CHECK(closed[0] == Complex<double>(0, 0));
      for (const auto& e : closed) {
        double nearest = 1e300;
        for (int i = 0; i < 5; ++i) nearest = std::min(nearest, std::abs(chain.eigenvalues(i) - e));
        CHECK(nearest < 1e-12);
      }
    }
  }
  SUBCASE("dark state") {
    for (int m = 2; m <= 6; ++m) {
      const auto chain = reduced_chain(m, 0.17, 1.3);
      CHECK(chain.dimension() == 2 * m - 1);
      CHECK(std::abs(chain.dark_state.norm() - 1) < 1e-15);
      for (int i = 1; i < chain.dimension(); i += 2) CHECK(chain.dark_state(i) == Complex<double>(0, 0));
      CHECK((chain.matrix * chain.dark_state).norm() < 1e-12);
      for (int i = 1; i < chain.dimension(); i += 2) CHECK(chain.matrix(i, i) == Complex<double>(0, -1.3));
    }
    const auto three = reduced_chain(3, 0.4, 1.0);
    const double s = 1 / std::sqrt(3.0);
    CHECK(three.dark_state(0).real() == doctest::Approx(s));
    CHECK(three.dark_state(2).real() == doctest::Approx(-s));
    CHECK(three.dark_state(4).real() == doctest::Approx(s));
    CHECK_THROWS_AS(reduced_chain(1, 0.4, 1.0), std::invalid_argument);
  }
}

TEST_CASE("HFE against the exact monodromy") {
  SUBCASE("omega = 10 at the quoted root") {
    const auto report = hfe_vs_exact(defect(2.40509, 1.0, 10.0));
    CHECK(report.modes == 3);
    REQUIRE(report.has_dark);
    CHECK(std::abs(report.exact_dark) < 1e-3);
    CHECK(report.exact_bic.size() == 5);
    CHECK(report.max_residual < 1e-3);
  }
  SUBCASE("omega = 1 reports larger residuals") {
    const auto report = hfe_vs_exact(defect(2.4308, 1.0, 1.0));
    CHECK(report.exact_bic.size() == report.residuals.size());
    CHECK(std::isfinite(report.max_residual));
  }
  SUBCASE("uniform band half-width") {
    // Finite chain: the outermost bulk level sits at 2|eta| cos(pi / (N + 1)).
    for (double omega : {3.0, 10.0}) {
      const auto c = uniform_profile(101, k0, Drive<double>::from_gamma_norm(1.8, omega));
      const auto report = hfe_vs_exact(c);
      const double finite = report.effective_band_half_width * std::cos(pi<double> / 102);
      INFO("omega = " << omega);
      CHECK(std::abs(report.exact_band_half_width - finite) < k0 * k0 * k0 / (omega * omega));
    }
  }
}
