#include <cmath>

#include "penalab/catalogue.hpp"
#include "penalab/rayknight.hpp"
#include "penalab/sturm.hpp"
#include "test_util.hpp"

using namespace penalab;

namespace {

// V = (1/2) 1_[-1,1] dx, halved so that 2V matches the box example.
RadonPotential half_box() {
  auto v = make_box_potential(std::sqrt(0.5), -1.0, 1.0);
  return v;
}

RadonPotential doubled(const RadonPotential& v) {
  RadonPotential w = v;
  for (auto& d : w.density) d *= 2.0;
  for (auto& a : w.atoms) a.mass *= 2.0;
  if (v.density_fn) {
    auto fn = v.density_fn;
    w.density_fn = [fn](double x) { return 2.0 * fn(x); };
  }
  return w;
}

}  // namespace

TEST_CASE("phi_lambda for a single atom: piecewise-linear closed form") {
  // lambda = c delta_a: phi(inf) = 1/(1+2ca), M = c/(1+2ca), N = ln(1+2ca)/2
  double c = 0.3, a = 1.0;
  RadonPotential v;
  v.grid = {0.0, 2.0};
  v.density = {0.0, 0.0};
  v.atoms = {{a, c}};
  v.support_bounds = {{0.0, 2.0}};
  v.tails.left_first_moment_finite = v.tails.right_first_moment_finite = true;
  auto e = phi_lambda(v);
  CHECK_ABS(e.phi_inf, 1.0 / 1.6, 1e-12);
  CHECK_ABS(e.M, 0.1875, 1e-12);
  CHECK_ABS(e.N, 0.5 * std::log(1.6), 1e-12);
}

TEST_CASE("phi_lambda for the zero measure") {
  RadonPotential v;
  v.grid = {0.0, 1.0};
  v.density = {0.0, 0.0};
  auto e = phi_lambda(v);
  CHECK(e.M == 0.0);
  CHECK(e.N == 0.0);
  CHECK(e.phi_inf == 1.0);
}

TEST_CASE("phi_lambda for the unit box against the cosh/sinh closed form") {
  // (1/2) phi'' = phi on [0,1]: phi(x) = cosh(sqrt2 (1-x)) + s sinh(...) with
  // a flat tail; solving gives phi(0) = cosh(sqrt2), phi'(0) = -sqrt2 sinh(sqrt2)
  // before normalization.
  RadonPotential v;
  v.grid = {0.0, 1.0};
  v.density = {1.0, 1.0};
  v.density_fn = [](double x) { return (x >= 0.0 && x <= 1.0) ? 1.0 : 0.0; };
  v.breakpoints = {1.0};
  v.support_bounds = {{0.0, 1.0}};
  v.tails.left_first_moment_finite = v.tails.right_first_moment_finite = true;
  auto e = phi_lambda(v);
  double s2 = std::sqrt(2.0);
  CHECK_ABS(e.phi_inf, 1.0 / std::cosh(s2), 1e-10);
  CHECK_ABS(e.M, 0.5 * s2 * std::tanh(s2), 1e-10);
}

TEST_CASE("H(V): three modes agree for the symmetric half box") {
  auto v = half_box();
  auto hf = h_of_v(v, HMode::Formula);
  auto hi = h_of_v(v, HMode::Integral);
  CHECK(hf.symmetric);
  CHECK_ABS(hf.h, hi.h, 1e-8);

  HMcOptions mo;
  mo.n_paths = 4000;
  mo.seed = 31;
  auto hm = h_of_v(v, HMode::Mc, mo);
  CHECK_ABS(hm.h, hf.h, 3.0 * hm.std_error + 0.01 * hf.h);
}

TEST_CASE("cross-pipeline identity sqrt(2/pi) H(V) = phi_{2V}(0)") {
  SUBCASE("box") {
    auto v = half_box();
    auto h = h_of_v(v, HMode::Formula);
    auto phi = solve_integrable_bvp(doubled(v), {-9.0, 9.0}, 1801);
    CHECK_ABS(kSqrt2OverPi * h.h, phi.value_at(0.0), 1e-4);
    // the closed form for this case is sqrt(2/pi)/sinh(1)
    CHECK_ABS(kSqrt2OverPi * h.h, kSqrt2OverPi / std::sinh(1.0), 1e-9);
  }
  SUBCASE("two atoms") {
    auto v = make_two_atom_potential(std::sqrt(0.5), -1.0, 1.0);
    auto h = h_of_v(v, HMode::Formula);
    auto phi = solve_integrable_bvp(doubled(v), {-9.0, 9.0}, 1801);
    CHECK_ABS(kSqrt2OverPi * h.h, phi.value_at(0.0), 1e-4);
  }
  SUBCASE("triangle") {
    auto v = make_triangle_potential(0.3, 0.8, 0.9);
    auto h = h_of_v(v, HMode::Formula);
    auto phi = solve_integrable_bvp(doubled(v), {-9.0, 9.0}, 1801);
    CHECK_ABS(kSqrt2OverPi * h.h, phi.value_at(0.0), 1e-4);
  }
}

TEST_CASE("H(V) diverges as V -> 0") {
  auto v = make_box_potential(1e-9, -1.0, 1.0);
  auto h = h_of_v(v, HMode::Formula);
  CHECK(h.divergent);
  CHECK(std::isinf(h.h));
}

TEST_CASE("h_of_v rejects non-compact support") {
  auto v = make_halfline_potential(1.0);
  CHECK_THROWS_AS(h_of_v(v, HMode::Formula), UnsupportedPotential);
}

TEST_CASE("BESQ Laplace MC against exp(-xM - dN) and additivity") {
  double c = 0.3, a = 1.0;
  RadonPotential v;
  v.grid = {0.0, 1.5};
  v.density = {0.0, 0.0};
  v.atoms = {{a, c}};
  v.support_bounds = {{0.0, 1.5}};
  v.tails.left_first_moment_finite = v.tails.right_first_moment_finite = true;

  SUBCASE("delta=0 from 0 is the null process") {
    auto r = besq_laplace_mc(0.0, 0.0, v, 500, 5);
    CHECK(r.mean == 1.0);
  }
  SUBCASE("delta=2 from 0: (1+2ca)^{-1}") {
    auto r = besq_laplace_mc(2.0, 0.0, v, 30000, 6);
    CHECK_ABS(r.mean, 1.0 / 1.6, 3.0 * r.std_error);
  }
  SUBCASE("additivity: delta=4 from 1 equals the (2,1)x(2,0) product") {
    auto r4 = besq_laplace_mc(4.0, 1.0, v, 30000, 7);
    auto r21 = besq_laplace_mc(2.0, 1.0, v, 30000, 8);
    auto r20 = besq_laplace_mc(2.0, 0.0, v, 30000, 9);
    double prod = r21.mean * r20.mean;
    double se = std::sqrt(std::pow(r21.mean * r20.std_error, 2) +
                          std::pow(r20.mean * r21.std_error, 2));
    CHECK_ABS(r4.mean, prod, 3.0 * (r4.std_error + se));
  }
}

TEST_CASE("additivity property: log Q is affine in (x, delta)") {
  double c = 0.25, a = 0.8;
  RadonPotential v;
  v.grid = {0.0, 1.2};
  v.density = {0.0, 0.0};
  v.atoms = {{a, c}};
  v.support_bounds = {{0.0, 1.2}};
  v.tails.left_first_moment_finite = v.tails.right_first_moment_finite = true;
  auto e = phi_lambda(v);
  std::uint64_t s = 100;
  for (double x : {0.0, 0.7, 1.4})
    for (double d : {0.0, 2.0, 4.0}) {
      auto r = besq_laplace_mc(d, x, v, 20000, ++s);
      double target = std::exp(-x * e.M - d * e.N);
      CHECK_ABS(r.mean, target, 3.0 * r.std_error + 1e-4);
    }
}
