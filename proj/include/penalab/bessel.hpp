#pragma once

#include <cstdint>
#include <vector>

#include "penalab/common.hpp"
#include "penalab/feynman_kac.hpp"

namespace penalab {

// ---------------------------------------------------------------------------
// Critical case: V = lambda/(theta + x^2) seen through Bessel processes of
// index mu (dimension 2(mu+1)). n_mu = (-mu + sqrt(mu^2 + lambda))/2 governs
// the polynomial decay t^{-n_mu}.
// ---------------------------------------------------------------------------

struct BesselParams {
  double mu = -0.5;
  double lambda = 1.0;
  double theta = 0.0;

  bool admissible() const { return lambda < 8 * mu * mu + 6 * mu + 1; }
};

double n_mu(const BesselParams& p);

// (1/2^n) Gamma(mu+n+1)/Gamma(mu+2n+1), the gamma-ratio limit constant.
double limit_constant(const BesselParams& p);

// ---------------------------------------------------------------------------
// The profile phi^(mu)_lambda: polynomial branch when n_mu is an integer,
// fractional-linear hypergeometric branch otherwise. Normalized so that
// phi(x)/x^{2 n_mu} -> 1.
// ---------------------------------------------------------------------------

struct HypergeomProfile {
  BesselParams params;
  bool polynomial_branch = false;
  std::size_t coeff_count = 0;   // series terms used at the worst grid point
  double k_mu = 1.0;
  std::vector<double> grid, values, derivs;
  double max_ode_residual = 0.0;

  double value_at(double x) const;  // fresh series evaluation
  double deriv_at(double x) const;
};

HypergeomProfile phi_hypergeom(const BesselParams& p, std::vector<double> grid);
double phi_hypergeom_value(const BesselParams& p, double x);
double phi_hypergeom_deriv(const BesselParams& p, double x);

// ---------------------------------------------------------------------------
// BESQ exact-transition sampling (additivity decomposition).
// ---------------------------------------------------------------------------

struct PathBundle {
  std::vector<double> times;
  std::size_t n_paths = 0;
  std::vector<double> data;  // n_paths x times.size(), row-major per path
  std::uint64_t seed = 0;

  double at(std::size_t path, std::size_t ti) const {
    return data[path * times.size() + ti];
  }
};

PathBundle sample_besq(double delta, double x0, std::vector<double> times,
                       std::size_t n_paths, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Theorem verification reports.
// ---------------------------------------------------------------------------

struct Theorem1Report {
  double t = 0.0;
  double mc_scaled = 0.0;        // t^n * MC of exp(-(lambda/2) int ds/R^2)
  double mc_stderr = 0.0;        // std error of the scaled estimate
  double exact_route = 0.0;      // x^{2n} E^nu_{x/sqrt t}[R_1^{-2n}], sampled exactly
  double exact_route_stderr = 0.0;
  double target = 0.0;           // x^{2n} * limit_constant
};

// mu > -1, theta = 0. The 1/R^2 integrand is capped at 1/dt; paths whose
// capped integral makes the weight fall below exp(-25) are recorded as 0.
std::vector<Theorem1Report> verify_theorem1(const BesselParams& p, double x,
                                            const std::vector<double>& t_list,
                                            std::size_t n_paths, std::uint64_t seed,
                                            double dt);

struct Theorem2Report {
  double t = 0.0;
  double x = 0.0;
  double pde_scaled = 0.0;  // t^n psi(t, x)
  double target = 0.0;      // theta^n phi(x/sqrt theta) * limit_constant
};

Theorem2Report verify_theorem2(const BesselParams& p, double x, double t,
                               const PdeOptions& opt,
                               bool override_admissibility = false);

std::string theorem1_csv(const std::vector<Theorem1Report>& reports);

}  // namespace penalab
