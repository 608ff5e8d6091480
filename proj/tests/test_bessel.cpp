#include <cmath>

#include "penalab/bessel.hpp"
#include "test_util.hpp"

using namespace penalab;

TEST_CASE("n_mu arithmetic") {
  CHECK_ABS(n_mu({-0.5, 2.0, 0.0}), 1.0, 1e-14);
  CHECK_ABS(n_mu({0.0, 4.0, 0.0}), 1.0, 1e-14);
  // lambda -> 0+, mu > 0: n -> 0
  CHECK_ABS(n_mu({0.7, 1e-12, 0.0}), 0.0, 1e-10);
  // matches n = (1 + sqrt(1+4 lambda))/4 at mu = -1/2
  for (double lam : {0.5, 2.0, 7.0})
    CHECK_ABS(n_mu({-0.5, lam, 0.0}), (1.0 + std::sqrt(1.0 + 4.0 * lam)) / 4.0, 1e-14);
}

TEST_CASE("limit constants from the gamma ratio") {
  CHECK_ABS(limit_constant({-0.5, 2.0, 0.0}), 1.0 / 3.0, 1e-14);
  CHECK_ABS(limit_constant({0.0, 4.0, 0.0}), 0.25, 1e-14);
  // n -> 0 gives 1
  CHECK_ABS(limit_constant({0.7, 1e-12, 0.0}), 1.0, 1e-9);
}

TEST_CASE("integer branch: phi for mu=0, lambda=4 is exactly 1+x^2") {
  BesselParams p{0.0, 4.0, 1.0};
  std::vector<double> grid;
  for (int i = 0; i <= 200; ++i) grid.push_back(0.05 * i);
  auto prof = phi_hypergeom(p, grid);
  CHECK(prof.polynomial_branch);
  CHECK_ABS(prof.k_mu, 1.0, 1e-13);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK_ABS(prof.values[i], 1.0 + grid[i] * grid[i], 1e-10);
    CHECK_ABS(prof.derivs[i], 2.0 * grid[i], 1e-10);
  }
}

TEST_CASE("phi(0) = k_mu for either branch") {
  // F(.,.,.;0) = 1, so phi(0) = k_mu
  for (auto p : {BesselParams{0.0, 0.5, 1.0}, BesselParams{-0.25, 1.3, 1.0},
                 BesselParams{0.0, 4.0, 1.0}}) {
    auto prof = phi_hypergeom(p, {0.0, 1.0});
    CHECK_ABS(prof.values[0], prof.k_mu, 1e-12 * prof.k_mu);
  }
}

TEST_CASE("fractional branch: asymptotics, monotonicity and gradient bound") {
  BesselParams p{0.0, 0.5, 1.0};
  double n = n_mu(p);
  std::vector<double> grid;
  for (int i = 0; i <= 400; ++i) grid.push_back(0.05 * i);
  auto prof = phi_hypergeom(p, grid);
  CHECK_FALSE(prof.polynomial_branch);
  CHECK(prof.max_ode_residual < 1e-6);

  // frozen value at x=1 (independent evaluation via scipy's hyp2f1)
  CHECK_ABS(prof.value_at(1.0), 1.92776632458099, 1e-10);

  // phi > 0, increasing, and phi(x)/x^{2n} -> 1
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(prof.values[i] > 0.0);
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(prof.values[i] >= prof.values[i - 1]);
  double xl = 200.0;
  CHECK_ABS(phi_hypergeom_value(p, xl) / std::pow(xl, 2 * n), 1.0, 2e-3);

  // 2n - rho/(1+x^2) <= x phi'/phi <= 2n for a fitted rho > 0
  double rho_fit = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double x = grid[i];
    double lhsv = x * prof.derivs[i] / prof.values[i];
    CHECK(lhsv <= 2 * n + 1e-10);
    rho_fit = std::max(rho_fit, (2 * n - lhsv) * (1 + x * x));
  }
  CHECK(rho_fit > 0.0);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double x = grid[i];
    CHECK(x * prof.derivs[i] / prof.values[i] >=
          2 * n - rho_fit * 1.0000001 / (1 + x * x) - 1e-12);
  }
}

TEST_CASE("branch consistency: perturbed fractional branch brackets the polynomial") {
  BesselParams p{0.0, 4.0, 1.0};
  double x = 1.7;
  double poly = phi_hypergeom_value(p, x);
  double lo = phi_hypergeom_value({0.0, 4.0 * (1 - 1e-8), 1.0}, x);
  double hi = phi_hypergeom_value({0.0, 4.0 * (1 + 1e-8), 1.0}, x);
  CHECK(std::min(lo, hi) <= poly + 1e-9);
  CHECK(poly <= std::max(lo, hi) + 1e-9);
}

TEST_CASE("BESQ sampling: moments and degenerate cases") {
  // delta = 2 from 0: E[Y_t] = 2t
  auto pb = sample_besq(2.0, 0.0, {0.0, 0.5, 1.0}, 20000, 11);
  double m = 0.0;
  for (std::size_t i = 0; i < pb.n_paths; ++i) m += pb.at(i, 2);
  m /= static_cast<double>(pb.n_paths);
  CHECK_ABS(m, 2.0, 0.06);

  // delta = 0 from 0 is absorbed at 0
  auto pz = sample_besq(0.0, 0.0, {0.0, 1.0}, 100, 3);
  for (std::size_t i = 0; i < pz.n_paths; ++i) CHECK(pz.at(i, 1) == 0.0);
}

TEST_CASE("BESQ Laplace transform against the closed form") {
  // E[exp(-c Y_a)] from x: (1+2ca)^{-delta/2} exp(-xc/(1+2ca)), derived by
  // solving the phi_lambda ODE for a single atom.
  double c = 0.3, a = 1.0, x = 0.5, delta = 2.0;
  auto pb = sample_besq(delta, x, {0.0, a}, 40000, 17);
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < pb.n_paths; ++i) {
    double w = std::exp(-c * pb.at(i, 1));
    s += w;
    s2 += w * w;
  }
  double mean = s / pb.n_paths;
  double se = std::sqrt((s2 / pb.n_paths - mean * mean) / (pb.n_paths - 1.0));
  double target = 1.0 / (1.0 + 2 * c * a) * std::exp(-x * c / (1.0 + 2 * c * a));
  CHECK_ABS(mean, target, 3.0 * se);
}

TEST_CASE("theorem 1: exact-route estimates hit the gamma-ratio constant") {
  BesselParams p{-0.5, 2.0, 0.0};
  auto reps = verify_theorem1(p, 1.0, {64.0}, 20000, 5, 0.05);
  REQUIRE(reps.size() == 1);
  CHECK_ABS(reps[0].target, 1.0 / 3.0, 1e-12);
  CHECK_ABS(reps[0].exact_route, reps[0].target, 3.0 * reps[0].exact_route_stderr);
  // direct MC within 3 stderr of the target at this (t, dt)
  CHECK_ABS(reps[0].mc_scaled, reps[0].target,
            3.0 * reps[0].mc_stderr + 0.02 * reps[0].target);
  // both routes agree within combined error bars
  CHECK_ABS(reps[0].mc_scaled, reps[0].exact_route,
            3.0 * (reps[0].mc_stderr + reps[0].exact_route_stderr) +
                0.02 * reps[0].target);
}

TEST_CASE("theorem 1: lambda = 0 is the unit functional") {
  BesselParams p{0.5, 0.0, 0.0};
  CHECK_ABS(n_mu(p), 0.0, 1e-15);
  CHECK_ABS(limit_constant(p), 1.0, 1e-14);
  auto reps = verify_theorem1(p, 1.0, {4.0}, 200, 3, 0.1);
  CHECK(reps[0].mc_scaled == 1.0);
  CHECK(reps[0].mc_stderr == 0.0);
}

TEST_CASE("theorem 1: mu=0 (planar Brownian norm) route") {
  BesselParams p{0.0, 4.0, 0.0};
  auto reps = verify_theorem1(p, 1.0, {49.0}, 12000, 9, 0.05);
  CHECK_ABS(reps[0].target, 0.25, 1e-12);
  CHECK_ABS(reps[0].exact_route, reps[0].target, 3.0 * reps[0].exact_route_stderr);
  CHECK_ABS(reps[0].mc_scaled, reps[0].target,
            3.0 * reps[0].mc_stderr + 0.03 * reps[0].target);
}

TEST_CASE("theorem 2 gate and trivial case") {
  // mu = -1/2: 8mu^2+6mu+1 = 0 excludes every positive lambda
  BesselParams bad{-0.5, 1.0, 1.0};
  PdeOptions opt;
  CHECK_THROWS_AS(verify_theorem2(bad, 1.0, 1.0, opt), InadmissibleParams);
  CHECK_FALSE(bad.admissible());
  CHECK(BesselParams{0.0, 0.5, 1.0}.admissible());
}

TEST_CASE("theorem 2: radial PDE approaches the hypergeometric target") {
  BesselParams p{0.0, 0.5, 1.0};
  PdeOptions opt;
  opt.dx = 0.05;
  opt.dt = 0.05;
  opt.t_max = 60.0;
  auto rep = verify_theorem2(p, 1.0, 60.0, opt);
  // frozen target value: phi(1) * limit_constant = 1.4769277921570414
  CHECK_ABS(rep.target, 1.4769277921570414, 1e-10);
  // at t = 60 the ratio is already within ~12%
  CHECK_ABS(rep.pde_scaled / rep.target, 1.0, 0.12);
}

TEST_CASE("sampling is seed-reproducible") {
  auto a = sample_besq(2.0, 1.0, {0.0, 1.0}, 100, 12345);
  auto b = sample_besq(2.0, 1.0, {0.0, 1.0}, 100, 12345);
  CHECK(a.data == b.data);
}
