#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "fbic/floquet.hpp"
#include "fbic/hfe.hpp"

using namespace fbic;

namespace {

LatticeConfig<double> defect(double gamma_norm, double gamma, double omega = 1.0) {
  return defect_profile(101, 0.3, 0.21, gamma, Drive<double>::from_gamma_norm(gamma_norm, omega));
}

double fold(double e, double omega) {
  double r = std::remainder(e, omega);
  if (r <= -omega / 2) r += omega;
  return r;
}

std::vector<double> sorted_real_parts(const SpectrumResult<double>& s) {
  std::vector<double> out;
  for (const auto& m : s.modes) out.push_back(m.quasi_energy.real());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("monodromy examples") {
  SUBCASE("no hopping and no loss gives the identity") {
    const auto c = make_lattice<double>(RVector<double>::Zero(6), RVector<double>::Zero(7),
                                        Drive<double>::from_gamma_norm(2.0, 1.5));
    CHECK((monodromy(c) - CMatrix<double>::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("lossless configs are unitary") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 4; ++trial) {
      const int n = 9 + 2 * trial;
      RVector<double> hop = RVector<double>::NullaryExpr(n - 1, [&] { return 0.1 + 0.4 * u(rng); });
      const auto c = make_lattice<double>(hop, RVector<double>::Zero(n),
                                          Drive<double>::from_gamma_norm(3 * u(rng), 0.5 + 3 * u(rng)));
      const auto m = monodromy(c);
      CHECK((m.adjoint() * m - CMatrix<double>::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
  SUBCASE("decoupled lossy site decays as exp(-gamma T)") {
    RVector<double> loss = RVector<double>::Zero(5);
    loss(2) = 0.6;
    const auto c = make_lattice<double>(RVector<double>::Zero(4), loss, Drive<double>::from_gamma_norm(1.0, 2.0));
    const auto m = monodromy(c);
    CHECK(std::abs(m(2, 2) - std::exp(-0.6 * c.drive.period())) < 1e-12);
  }
  SUBCASE("dissipative contraction") {
    const auto m = monodromy(defect(2.4308, 1.0));
    Eigen::JacobiSVD<CMatrix<double>> svd(m);
    CHECK(svd.singularValues()(0) <= 1 + 1e-8);
  }
  SUBCASE("parallel column chunks give the same matrix") {
    const auto c = defect_profile(21, 0.3, 0.21, 1.0, Drive<double>::from_gamma_norm(2.0, 1.0));
    MonodromyOptions<double> serial, split;
    split.jobs = 3;
    CHECK(monodromy(c, serial) == monodromy(c, split));
  }
  SUBCASE("nonlinear configs are rejected") {
    RVector<double> nl = RVector<double>::Zero(5);
    nl(2) = 1;
    const auto c = make_lattice<double>(RVector<double>::Constant(4, 0.3), RVector<double>::Zero(5), {}, nl);
    CHECK_THROWS_AS(monodromy(c), std::invalid_argument);
  }
}

TEST_CASE("static lattice matches direct diagonalization") {
  SUBCASE("uniform chain, analytic spectrum folded into the zone") {
    const int n = 9;
    const double k = 0.3, omega = 1.0;
    const auto c = uniform_profile(n, k, Drive<double>{0.0, omega, 1.0});
    const auto s = floquet_spectrum(monodromy(c), omega);
    std::vector<double> expected;
    for (int q = 1; q <= n; ++q) expected.push_back(fold(-2 * k * std::cos(q * pi<double> / (n + 1)), omega));
    std::sort(expected.begin(), expected.end());
    const auto got = sorted_real_parts(s);
    for (int i = 0; i < n; ++i) CHECK(std::abs(got[i] - expected[i]) < 1e-9);
    for (const auto& m : s.modes) CHECK(std::abs(m.quasi_energy.imag()) < 1e-9);
  }
  SUBCASE("random static chains with loss") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 5; ++trial) {
      const int n = 7 + 2 * trial;
      RVector<double> hop = RVector<double>::NullaryExpr(n - 1, [&] { return 0.05 + 0.3 * u(rng); });
      RVector<double> loss = RVector<double>::NullaryExpr(n, [&] { return u(rng) < 0.4 ? u(rng) : 0.0; });
      const double omega = 1.0 + u(rng);
      const auto c = make_lattice<double>(hop, loss, Drive<double>{0.0, omega, 1.0});
      Eigen::ComplexEigenSolver<CMatrix<double>> direct(hamiltonian_at(c, 0.0), false);
      const auto s = floquet_spectrum(monodromy(c), omega);
      for (int i = 0; i < n; ++i) {
        const Complex<double> e = direct.eigenvalues()(i);
        const Complex<double> folded(fold(e.real(), omega), e.imag());
        double nearest = 1e300;
        for (const auto& m : s.modes) nearest = std::min(nearest, std::abs(m.quasi_energy - folded));
        CHECK(nearest < 1e-9);
      }
    }
  }
}

TEST_CASE("spectrum invariants") {
  const auto c = defect(2.0, 0.0);
  const auto s = floquet_spectrum(monodromy(c), 1.0);
  REQUIRE(s.modes.size() == 101);
  for (std::size_t i = 0; i < s.modes.size(); ++i) {
    const auto& m = s.modes[i];
    CHECK(m.mode_index == static_cast<int>(i));
    CHECK(std::abs(m.quasi_energy.imag()) < 1e-9);
    CHECK(m.quasi_energy.real() > -0.5);
    CHECK(m.quasi_energy.real() <= 0.5);
    CHECK(std::abs(m.profile.norm() - 1) < 1e-12);
    CHECK(m.ipr >= 1.0 / 101 - 1e-12);
    CHECK(m.ipr <= 1.0 + 1e-12);
    Eigen::Index peak;
    m.profile.cwiseAbs().maxCoeff(&peak);
    CHECK(m.profile(peak).imag() == doctest::Approx(0.0));
    CHECK(m.profile(peak).real() > 0);
    if (i) CHECK(s.modes[i - 1].quasi_energy.real() <= m.quasi_energy.real());
  }
}

TEST_CASE("band collapse at the J0 zero") {
  SUBCASE("extended modes at omega = 1") {
    const auto c = uniform_profile(101, 0.3, Drive<double>::from_gamma_norm(2.404826, 1.0));
    const auto s = floquet_spectrum(monodromy(c), 1.0);
    double lo = 1, hi = -1;
    for (const auto& m : s.modes)
      if (m.ipr < 0.1) lo = std::min(lo, m.quasi_energy.real()), hi = std::max(hi, m.quasi_energy.real());
    CHECK(hi - lo < 1e-3);
  }
  SUBCASE("whole spectrum at omega = 10") {
    // The two open ends carry bound states displaced by O(k^3 / omega^2).
    const auto c = uniform_profile(101, 0.3, Drive<double>::from_gamma_norm(2.404826, 10.0));
    const auto re = sorted_real_parts(floquet_spectrum(monodromy(c), 10.0));
    CHECK(re.back() - re.front() < 1e-3);
  }
}

TEST_CASE("ipr") {
  CVector<double> delta = CVector<double>::Zero(11);
  delta(3) = Complex<double>(0, 2);
  CHECK(ipr(delta) == doctest::Approx(1.0));
  CHECK(ipr(CVector<double>::Constant(20, Complex<double>(0.3, -0.1))) == doctest::Approx(1.0 / 20));
  CVector<double> pair = CVector<double>::Zero(6);
  pair(1) = 1;
  pair(4) = Complex<double>(0, -1);
  CHECK(ipr(pair) == doctest::Approx(0.5));
  CVector<double> v = CVector<double>::Random(15);
  CHECK(ipr(v) == doctest::Approx(ipr((Complex<double>(3, 4) * v).eval())).epsilon(1e-14));
  CHECK_THROWS_AS(ipr(CVector<double>::Zero(4)), std::invalid_argument);
}

TEST_CASE("continuum band") {
  const auto c = uniform_profile(11, 0.3, Drive<double>{});
  SUBCASE("undriven") {
    const auto b = continuum_band(c, 0.0);
    CHECK(b.margin == doctest::Approx(0.05 * 0.6));
    CHECK(b.lower == doctest::Approx(-0.6 - b.margin));
    CHECK(b.upper == doctest::Approx(0.6 + b.margin));
  }
  SUBCASE("Gamma = 1.8 against std::cyl_bessel_j") {
    const double half = 0.6 * std::abs(std::cyl_bessel_j(0.0, 1.8));
    const auto b = continuum_band(c, 1.8);
    CHECK(b.upper == doctest::Approx(half * 1.05).epsilon(1e-12));
    CHECK(b.lower == -b.upper);
  }
  SUBCASE("collapsed band keeps only the margin") {
    BandOptions<double> opt;
    opt.absolute_margin = 0.015;
    const auto b = continuum_band(c, j0_first_zero<double>(), opt);
    CHECK(b.upper - b.lower == doctest::Approx(2 * 0.015).epsilon(1e-12));
  }
}

TEST_CASE("classification near the Bessel zero (Gamma = 1.8)") {
  const int expected[] = {0, 2, 3};
  const double gammas[] = {0.0, 0.1, 1.0};
  for (int i = 0; i < 3; ++i) {
    const auto s = analyze(defect(1.8, gammas[i]));
    INFO("gamma = " << gammas[i]);
    CHECK(s.bic_count() == expected[i]);
    CHECK(s.count(ModeLabel::boc) == 0);
    if (gammas[i] == 0.1) CHECK(s.count(ModeLabel::dark_bic) == 0);
  }
}

TEST_CASE("classification at Gamma = 2.4308, gamma = 1") {
  const auto c = defect(2.4308, 1.0);
  const auto spectrum = floquet_spectrum(monodromy(c), 1.0);
  for (double scale : {0.5, 1.0, 2.0}) {
    BandOptions<double> band;
    band.relative_margin *= scale;
    const auto s = classify(spectrum, c, continuum_band(c, 2.4308, band));
    INFO("margin scale " << scale);
    CHECK(s.bic_count() == 5);
    CHECK(s.count(ModeLabel::boc) == 8);
    CHECK(s.count(ModeLabel::dark_bic) == 1);
    const auto* dark = s.dark_mode();
    REQUIRE(dark != nullptr);
    CHECK(std::abs(dark->quasi_energy.real()) < 1e-3);
    CHECK(dark->lossy_population < 1e-2);
    CHECK(std::norm(dark->profile(c.index_of(1))) + std::norm(dark->profile(c.index_of(-1))) < 1e-2);
    for (const auto& m : s.modes)
      if (is_bic(m.label)) CHECK(std::abs(m.quasi_energy.real()) < 1e-3);
  }
}

TEST_CASE("dark BIC keeps off the lossy sites for gamma >= 1") {
  for (double gamma : {1.0, 3.0, 10.0}) {
    const auto s = analyze(defect(2.4308, gamma));
    const auto* dark = s.dark_mode();
    REQUIRE(dark != nullptr);
    CHECK(dark->lossy_population < 1e-2);
  }
}

TEST_CASE("uniform lossless lattice away from the zero has only extended modes") {
  const auto s = analyze(uniform_profile(101, 0.3, Drive<double>::from_gamma_norm(1.0, 1.0)));
  CHECK(s.count(ModeLabel::extended) == 101);
}

TEST_CASE("dark BIC |Im eps| decreases with omega at the beta root") {
  std::vector<double> trend;
  for (double omega : {1.0, 3.0, 10.0}) {
    const double root = beta_root(0.3, 0.21, omega);
    const auto values = dark_bic_imag_trend<double>(
        [&](double gamma) { return defect(root, gamma, omega); }, {1.0});
    trend.push_back(std::abs(values[0]));
  }
  CHECK(trend[0] > trend[1]);
  CHECK(trend[1] > trend[2]);
}

TEST_CASE("dark BIC |Im eps| decreases over gamma in {0.1, 1, 10}") {
  const auto values = dark_bic_imag_trend<double>([](double gamma) { return defect(2.4308, gamma); }, {0.1, 1.0, 10.0});
  INFO("Im eps = " << values[0] << ", " << values[1] << ", " << values[2]);
  CHECK(std::abs(values[0]) > std::abs(values[1]));
  CHECK(std::abs(values[1]) > std::abs(values[2]));
}

TEST_CASE("dark_bic_imag_trend reports a missing dark BIC") {
  CHECK_THROWS_AS(dark_bic_imag_trend<double>([](double gamma) { return defect(1.8, gamma); }, {0.1}), NumericalError);
}
