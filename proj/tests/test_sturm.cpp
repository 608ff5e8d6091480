#include <algorithm>
#include <cmath>

#include "penalab/catalogue.hpp"
#include "penalab/sturm.hpp"
#include "test_util.hpp"

using namespace penalab;

namespace {

// Independent root of tan(a sqrt(g)) = sqrt((1-g)/g), pinned by plain
// bisection before being compared with the solver.
double tan_root(double a) {
  auto f = [a](double g) { return std::tan(a * std::sqrt(g)) - std::sqrt((1 - g) / g); };
  double lo = 1e-12, hi = std::min(1.0, std::pow(kPi / (2 * a), 2)) - 1e-12;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (f(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("closed-form oracle values") {
  // Evaluations of the displayed formulas, frozen from an independent pass.
  CHECK_ABS(closed_form_oracle("ex4.1", {{"gamma", 1.0}, {"a", -1.0}, {"b", 1.0}}, 0.0),
            0.6789344370294275, 1e-12);
  CHECK_ABS(closed_form_oracle("ex4.1", {{"gamma", 1.0}, {"a", -1.0}, {"b", 1.0}}, 2.0),
            1.8455351428921645, 1e-12);
  CHECK_ABS(closed_form_oracle("ex5.1", {{"lambda", 1.0}}, 0.0), kSqrt2OverPi, 1e-14);
  CHECK_ABS(closed_form_oracle("ex5.1", {{"lambda", 1.0}}, -1.0), 2.0 * kSqrt2OverPi,
            1e-14);
  // ex8.1 at x=0 equals 1/cos(sqrt(gamma0))
  double g0 = tan_root(1.0);
  CHECK_ABS(closed_form_oracle("ex8.1", {{"a", 1.0}}, 0.0), 1.0 / std::cos(std::sqrt(g0)),
            1e-10);
  CHECK_THROWS_AS(closed_form_oracle("nope", {}, 0.0), UnknownFormula);
}

TEST_CASE("gamma0 root for the unit step well") {
  double g0 = bilateral_gamma0_root(1.0);
  CHECK_ABS(g0, 0.5462468341396718, 1e-12);
  CHECK_ABS(g0, tan_root(1.0), 1e-12);
}

TEST_CASE("integrable solver reproduces the box-potential closed form") {
  auto v = make_box_potential(1.0, -1.0, 1.0);
  auto phi = solve_integrable_bvp(v, {-10.0, 10.0}, 2001);
  double max_err = 0.0;
  for (std::size_t i = 0; i < phi.grid.size(); ++i) {
    double want =
        closed_form_oracle("ex4.1", {{"gamma", 1.0}, {"a", -1.0}, {"b", 1.0}}, phi.grid[i]);
    max_err = std::max(max_err, std::abs(phi.values[i] - want));
  }
  CHECK(max_err < 1e-6);

  SUBCASE("affine tails with slope sqrt(2/pi)") {
    CHECK_ABS(phi.derivs.front(), -kSqrt2OverPi, 1e-9);
    CHECK_ABS(phi.derivs.back(), kSqrt2OverPi, 1e-9);
  }
  SUBCASE("normalization: int phi dV = 4/sqrt(2 pi)") {
    CHECK_ABS(integral_phi_dV(phi, v), 4.0 / kSqrt2Pi, 1e-6);
  }
  SUBCASE("convex and positive") {
    for (double val : phi.values) CHECK(val > 0.0);
    for (std::size_t i = 1; i + 1 < phi.grid.size(); ++i) {
      double hl = phi.grid[i] - phi.grid[i - 1], hr = phi.grid[i + 1] - phi.grid[i];
      double sl = (phi.values[i] - phi.values[i - 1]) / hl;
      double sr = (phi.values[i + 1] - phi.values[i]) / hr;
      CHECK(sr - sl > -1e-9);
    }
  }
}

TEST_CASE("integrable solver: asymmetric box and off-center probes") {
  auto v = make_box_potential(0.7, 0.5, 2.5);
  auto phi = solve_integrable_bvp(v, {-8.0, 12.0}, 1501);
  FormulaParams p{{"gamma", 0.7}, {"a", 0.5}, {"b", 2.5}};
  for (double x : {-3.0, 0.4, 0.5, 1.3, 2.5, 7.0})
    CHECK_ABS(phi.value_at(x), closed_form_oracle("ex4.1", p, x), 1e-7);
  CHECK_ABS(integral_phi_dV(phi, v), 4.0 / kSqrt2Pi, 1e-6);
}

TEST_CASE("two Dirac atoms reproduce the piecewise-linear profile exactly") {
  auto v = make_two_atom_potential(1.0, -1.0, 1.0);
  auto phi = solve_integrable_bvp(v, {-10.0, 10.0}, 2001);
  FormulaParams p{{"gamma", 1.0}, {"a", -1.0}, {"b", 1.0}};
  double max_err = 0.0;
  for (std::size_t i = 0; i < phi.grid.size(); ++i)
    max_err = std::max(max_err,
                       std::abs(phi.values[i] - closed_form_oracle("ex4.2", p, phi.grid[i])));
  CHECK(max_err < 1e-8);

  // plateau value sqrt(2/pi)/gamma^2 and the atom jump law phi'(a+)-phi'(a-) = m phi(a)
  CHECK_ABS(phi.value_at(0.0), kSqrt2OverPi, 1e-10);
  REQUIRE(phi.kinks.size() == 2);
  for (const auto& k : phi.kinks) {
    double jump = k.d_right - k.d_left;
    CHECK_ABS(jump, 1.0 * phi.values[k.index], 1e-9);
  }
  CHECK_ABS(integral_phi_dV(phi, v), 4.0 / kSqrt2Pi, 1e-9);
}

TEST_CASE("single atom (a=b) degenerate two-atom potential") {
  auto v = make_two_atom_potential(1.0, 0.5, 0.5);  // one atom of mass 2 at 0.5
  auto phi = solve_integrable_bvp(v, {-6.0, 6.0}, 1201);
  // phi = sqrt(2/pi)(1/gamma^2 + |x-a|) with gamma = 1
  for (double x : {-2.0, 0.5, 3.0})
    CHECK_ABS(phi.value_at(x), kSqrt2OverPi * (1.0 + std::abs(x - 0.5)), 1e-9);
}

TEST_CASE("unilateral solver: Example 5.1 half-line potential") {
  auto v = make_halfline_potential(1.0);
  auto phi = solve_unilateral_bvp(v, {-6.0, 12.0}, 1801);
  double max_err = 0.0;
  for (std::size_t i = 0; i < phi.grid.size(); ++i) {
    double want = closed_form_oracle("ex5.1", {{"lambda", 1.0}}, phi.grid[i]);
    max_err = std::max(max_err, std::abs(phi.values[i] - want));
  }
  CHECK(max_err < 1e-6);
  CHECK_ABS(phi.value_at(-1.0), 2.0 * kSqrt2OverPi, 1e-8);
  // decay bound holds with the fitted constants
  CHECK(phi.right_asym.kind == EdgeKind::StretchedExp);
  CHECK(phi.right_asym.rate > 0.0);
  for (std::size_t i = 0; i < phi.grid.size(); ++i) {
    double x = phi.grid[i];
    if (x <= 0.0) continue;
    CHECK(phi.values[i] <=
          phi.right_asym.scale_c *
                  std::exp(-phi.right_asym.rate * std::pow(x, 1.0 - phi.right_asym.alpha)) +
              1e-12);
  }
}

TEST_CASE("unilateral solver: Example 5.2 with C^1 gluing at x=1") {
  auto v = make_quadratic_tail_potential();
  auto phi = solve_unilateral_bvp(v, {-4.0, 9.0}, 2601);
  double max_err = 0.0;
  for (std::size_t i = 0; i < phi.grid.size(); ++i) {
    double want = closed_form_oracle("ex5.2", {}, phi.grid[i]);
    max_err = std::max(max_err, std::abs(phi.values[i] - want));
  }
  CHECK(max_err < 1e-6);
  // value and one-sided derivatives at the gluing point
  CHECK_ABS(phi.value_at(1.0), kSqrt2OverPi, 1e-7);
  double h = 1e-4;
  double dl = (phi.value_at(1.0) - phi.value_at(1.0 - h)) / h;
  double dr = (phi.value_at(1.0 + h) - phi.value_at(1.0)) / h;
  CHECK_ABS(dl, -kSqrt2OverPi, 2e-4);
  CHECK_ABS(dr, -kSqrt2OverPi, 2e-4);
}

TEST_CASE("bilateral eigenproblem: Example 8.1") {
  auto v = make_step_well_potential(1.0);
  auto res = solve_bilateral_eigen(v, {0.0, 1.0}, 1e-10);
  double g0 = tan_root(1.0);
  CHECK_ABS(res.gamma0, g0, 1e-8);

  // profile matches the displayed closed form
  double max_err = 0.0;
  for (std::size_t i = 0; i < res.phi.grid.size(); ++i) {
    double want = closed_form_oracle("ex8.1", {{"a", 1.0}}, res.phi.grid[i]);
    max_err = std::max(max_err, std::abs(res.phi.values[i] - want));
  }
  CHECK(max_err < 1e-6);
  CHECK_ABS(res.phi.gamma_shift, g0, 1e-8);

  // mismatch trace brackets zero
  bool has_pos = false, has_neg = false;
  for (auto& [g, m] : res.mismatch_trace) {
    (void)g;
    has_pos |= m > 0;
    has_neg |= m < 0;
  }
  CHECK(has_pos);
  CHECK(has_neg);
}

TEST_CASE("bilateral mismatch is monotone in gamma along the trace") {
  auto v = make_step_well_potential(1.0);
  auto res = solve_bilateral_eigen(v, {0.0, 1.0}, 1e-10);
  auto trace = res.mismatch_trace;
  std::sort(trace.begin(), trace.end());
  for (std::size_t i = 1; i < trace.size(); ++i)
    CHECK(trace[i].second <= trace[i - 1].second + 1e-12);
}

TEST_CASE("constant potential has no spectral shift to find") {
  RadonPotential v;
  v.grid = {-5.0, 0.0, 5.0};
  v.density = {1.0, 1.0, 1.0};
  v.tails.left_limit = TailLimit::Finite;
  v.tails.right_limit = TailLimit::Finite;
  v.tails.left_limit_value = 1.0;
  v.tails.right_limit_value = 1.0;
  CHECK_THROWS_AS(solve_bilateral_eigen(v, {0.0, 1.0}, 1e-10), NoSignChange);
}

TEST_CASE("misclassified potentials are rejected by the solvers") {
  auto box = make_box_potential(1.0, -1.0, 1.0);
  CHECK_THROWS_AS(solve_unilateral_bvp(box, {-5.0, 5.0}, 101), InvalidArgument);
  auto half = make_halfline_potential(1.0);
  CHECK_THROWS_AS(solve_integrable_bvp(half, {-5.0, 50.0}, 101), InvalidArgument);
}

TEST_CASE("profile drift extension beyond the grid") {
  auto v = make_box_potential(1.0, -1.0, 1.0);
  auto phi = solve_integrable_bvp(v, {-10.0, 10.0}, 801);
  // affine continuation: phi(12) = phi(10) + sqrt(2/pi)*2
  CHECK_ABS(phi.value_at(12.0), phi.values.back() + 2.0 * kSqrt2OverPi, 1e-12);
  CHECK_ABS(phi.drift_at(12.0), kSqrt2OverPi / phi.value_at(12.0), 1e-12);
}
