#pragma once

#include <cstddef>
#include <vector>

#include "penalab/common.hpp"

namespace penalab {

// ---------------------------------------------------------------------------
// Large-deviations rate for the slow-decay potential lambda/(1+|x|^alpha):
// I_eta(lambda) = inf { int psi'^2 + lambda int dt/(eta + psi^alpha) } over
// paths vanishing at 0. The extremal profile satisfies the first integral
// psi'(t)^2 = lambda (1/(eta+psi^a) - 1/(eta+C^a)) with C = psi(1) fixed by
// the endpoint equation H_eta(C, C) = 1.
// ---------------------------------------------------------------------------

struct LDSolution {
  double alpha = 1.0;
  double lambda = 1.0;
  double eta = 0.0;
  double C = 0.0;
  std::vector<double> t_grid, psi, psi_deriv;
  double I = 0.0;
  double euler_residual = 0.0;           // max |2 psi'' + a l psi^{a-1}/(eta+psi^a)^2|
  double first_integral_residual = 0.0;  // max defect of the first integral
  double endpoint_residual = 0.0;        // |H_eta(C, C) - 1|
  double inversion_residual = 0.0;       // max |H_eta(C, psi(t)) - t|
};

// Endpoint value C with (1/sqrt(lambda)) int_0^C dy/sqrt(g(y)-g(C)) = 1;
// the square-root endpoint singularity is removed by y = C sin^2(theta).
double solve_c_eta(double alpha, double lambda, double eta, double tol = 1e-12);

// Extremal profile psi on an n-point grid by inverting t = H_eta(C, psi).
LDSolution psi_profile(double alpha, double lambda, double eta, double Cval,
                       std::size_t n);

// Rate value; eta = 0 is obtained as the limit of a decreasing eta-sequence
// with Richardson extrapolation (the direct integrand is singular at t=0).
double rate_I(double alpha, double lambda, double eta);

std::string ld_sweep_csv(const std::vector<LDSolution>& rows);

}  // namespace penalab
