#include <cmath>

#include "penalab/ld_rate.hpp"
#include "test_util.hpp"

using namespace penalab;

namespace {

// alpha = 1, eta = 0 closed forms, derived by brute-force quadrature and
// pinned before wiring: C = (2 sqrt(lambda)/pi)^{2/3}, I0 = 3 (pi/2)^{2/3}
// lambda^{2/3}.
double c_closed(double lambda) { return std::pow(2.0 * std::sqrt(lambda) / kPi, 2.0 / 3.0); }
double i0_closed(double lambda) {
  return 3.0 * std::pow(kPi / 2.0, 2.0 / 3.0) * std::pow(lambda, 2.0 / 3.0);
}

}  // namespace

TEST_CASE("solve_c_eta against the alpha=1, eta=0 closed form") {
  for (double lam : {0.5, 1.0, 2.0}) {
    double c = solve_c_eta(1.0, lam, 0.0);
    CHECK_ABS(c, c_closed(lam), 1e-9);
  }
  // frozen numeric value at lambda = 1
  CHECK_ABS(solve_c_eta(1.0, 1.0, 0.0), 0.7400369683073562, 1e-9);
}

TEST_CASE("C scales like lambda^{1/(2+alpha)}") {
  for (double alpha : {0.5, 1.0, 1.5}) {
    double c1 = solve_c_eta(alpha, 1.0, 0.0);
    for (double lam : {0.5, 2.0, 4.0}) {
      double cl = solve_c_eta(alpha, lam, 0.0);
      CHECK_ABS(cl, std::pow(lam, 1.0 / (2.0 + alpha)) * c1, 2e-8 * cl);
    }
  }
}

TEST_CASE("degenerate eta is flagged, not computed") {
  CHECK_THROWS_AS(solve_c_eta(1.0, 1.0, 1e7), BracketingFailed);
  CHECK_THROWS_WITH_AS(solve_c_eta(1.0, 1.0, 1e7),
                       doctest::Contains("MonotoneDrift"), BracketingFailed);
}

TEST_CASE("psi_profile boundary values and identities") {
  double alpha = 1.0, lam = 1.0, eta = 0.05;
  double C = solve_c_eta(alpha, lam, eta);
  auto sol = psi_profile(alpha, lam, eta, C, 2001);

  CHECK(sol.psi.front() == 0.0);
  CHECK_ABS(sol.psi.back(), C, 1e-14);
  CHECK(sol.endpoint_residual < 1e-10);
  CHECK(sol.inversion_residual < 1e-10);

  // strictly increasing, derivative vanishing at t=1
  for (std::size_t i = 1; i < sol.psi.size(); ++i) CHECK(sol.psi[i] > sol.psi[i - 1]);
  CHECK_ABS(sol.psi_deriv.back(), 0.0, 1e-12);

  // first integral and Euler defects on the tabulated profile
  CHECK(sol.first_integral_residual < 1e-8);
  CHECK(sol.euler_residual < 1e-6);
}

TEST_CASE("eta = 0 profile: first-integral identity pointwise") {
  double alpha = 1.0, lam = 1.0;
  double C = solve_c_eta(alpha, lam, 0.0);
  auto sol = psi_profile(alpha, lam, 0.0, C, 2001);
  double gc = 1.0 / C;
  for (std::size_t i = 1; i + 1 < sol.psi.size(); ++i) {
    double d = sol.psi_deriv[i];
    CHECK_ABS(d * d, lam * (1.0 / sol.psi[i] - gc), 1e-8);
  }
  CHECK(sol.first_integral_residual < 1e-8);
  // profile is concave (the Euler equation has psi'' <= 0)
  for (std::size_t i = 1; i + 1 < sol.psi.size(); ++i)
    CHECK(sol.psi[i + 1] - 2.0 * sol.psi[i] + sol.psi[i - 1] < 1e-12);
}

TEST_CASE("I_eta is decreasing in eta") {
  double prev = rate_I(1.0, 1.0, 0.1);
  for (double eta : {0.05, 0.01}) {
    double cur = rate_I(1.0, 1.0, eta);
    CHECK(cur > prev);
    prev = cur;
  }
  // and I_0 dominates them all
  CHECK(rate_I(1.0, 1.0, 0.0) > prev);
}

TEST_CASE("rate at eta=0 matches the closed form and scales exactly") {
  double i0_1 = rate_I(1.0, 1.0, 0.0);
  CHECK_ABS(i0_1, i0_closed(1.0), 1e-5);
  CHECK(i0_1 > 0.0);
  for (double lam : {0.5, 2.0, 4.0}) {
    double i0 = rate_I(1.0, lam, 0.0);
    CHECK_ABS(i0 / std::pow(lam, 2.0 / 3.0), i0_1, 1e-5 * i0_1);
  }
}

TEST_CASE("rate for other tail exponents stays positive and eta-monotone") {
  for (double alpha : {0.5, 1.5}) {
    double a = rate_I(alpha, 1.0, 0.1);
    double b = rate_I(alpha, 1.0, 0.02);
    CHECK(a > 0.0);
    CHECK(b > a);
  }
}
