#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "penalab/common.hpp"
#include "penalab/potential.hpp"

namespace penalab {

// ---------------------------------------------------------------------------
// ZSurface: snapshots of Z(t, x) on a uniform spatial grid. Snapshot times are
// dense early and sparse late so that both the Laplace quadrature and the
// long-time fits see enough structure.
// ---------------------------------------------------------------------------

struct ZSurface {
  std::vector<double> times;   // stored snapshot times, starting at 0
  std::vector<double> grid;    // uniform x grid
  std::vector<double> values;  // times.size() x grid.size(), row-major
  double dt = 0.0;
  double dx = 0.0;
  double boundary_drift = 0.0;  // max deviation of the edge node from its
                                // frozen-potential evolution

  double at(std::size_t ti, std::size_t xi) const {
    return values[ti * grid.size() + xi];
  }
  std::size_t nearest_x(double x) const;
  std::vector<double> probe(double x) const;  // time series at the nearest node
  std::string to_csv() const;
};

struct PdeOptions {
  double dx = 0.02;
  double dt = 0.01;
  double t_max = 1.0;
  double boundary_tol = 1e-3;  // DomainTooNarrow threshold; <=0 disables
  // snapshot schedule: every step below t_dense, then coarser
  double t_dense = 2.0;
  double snap_mid = 0.25;   // spacing on [t_dense, 20]
  double snap_late = 1.0;   // spacing beyond
};

// dZ/dt = 1/2 Z'' - 1/2 V Z, Z(0,.) = 1, reflecting ends. Atoms enter the
// discrete operator as flux jumps -(m/2) Z(a) spread over the two nodes
// adjacent to a.
ZSurface solve_pde_z(const RadonPotential& v, std::pair<double, double> x_domain,
                     const PdeOptions& opt);
ZSurface solve_pde_z(const SignedPotential& v, std::pair<double, double> x_domain,
                     const PdeOptions& opt);

// Radial variant on [0, x_max]: dpsi/dt = 1/2 psi'' + (2mu+1)/(2x) psi'
//  - (lambda/2) psi/(theta + x^2), psi(0,.) = 1, entrance behaviour at 0
// handled by a regularized node at dx/2 in conservative form.
ZSurface solve_pde_radial(double mu, double lambda, double theta, double x_max,
                          const PdeOptions& opt);

// ---------------------------------------------------------------------------
// Monte Carlo with local-time weights.
// ---------------------------------------------------------------------------

struct McOptions {
  std::size_t n_paths = 10000;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  double band_c = 1.0;  // local-time band half-width = band_c * sqrt(dt)
};

// E_x[ f(B_t) exp(-1/2 int L^y_t V(dy)) ]; density part by trapezoid along the
// path, atoms by the shrinking-band occupation estimator (O(sqrt(dt)) bias).
McResult estimate_weighted_mc(const RadonPotential& v, double x, double t,
                              const McOptions& opt,
                              const std::function<double(double)>& terminal = {});
McResult estimate_weighted_mc(const SignedPotential& v, double x, double t,
                              const McOptions& opt,
                              const std::function<double(double)>& terminal = {});

inline McResult estimate_z_mc(const RadonPotential& v, double x, double t,
                              const McOptions& opt) {
  return estimate_weighted_mc(v, x, t, opt);
}
inline McResult estimate_z_mc(const SignedPotential& v, double x, double t,
                              const McOptions& opt) {
  return estimate_weighted_mc(v, x, t, opt);
}

// ---------------------------------------------------------------------------
// Normalized Laplace transform A~(lambda, x) = sqrt(2 lambda) A(lambda, x)
// with A the time-Laplace transform of Z; includes the defect density
// theta(lambda, x) = (A~)'' - A~ V and its sup norm.
// ---------------------------------------------------------------------------

struct TauberianCheck {
  std::vector<double> lambdas;        // decreasing
  std::vector<double> grid;
  std::vector<double> a_tilde;        // lambdas.size() x grid.size()
  std::vector<double> a_tilde_prime;  // same layout
  std::vector<double> theta_sup;      // per lambda
  std::vector<double> target;         // sqrt(2 pi) phi_V(x); empty until set
  double tail_constant = 0.0;         // fitted c in Z ~ c/sqrt(t)

  double at(std::size_t li, std::size_t xi) const {
    return a_tilde[li * grid.size() + xi];
  }
  double prime_at(std::size_t li, std::size_t xi) const {
    return a_tilde_prime[li * grid.size() + xi];
  }
  std::string to_csv() const;
};

// tail_extrapolation: continue Z beyond the last snapshot by the fitted
// c/sqrt(t) law (closed-form tail integral). Without it, t_max must cover
// 10/min(lambda), else TailNotCovered.
TauberianCheck laplace_tilde_A(const ZSurface& zs, const RadonPotential& v,
                               std::vector<double> lambdas, bool tail_extrapolation);

// ---------------------------------------------------------------------------
// Decay-law fits.
// ---------------------------------------------------------------------------

struct DecayEstimate {
  double k = 0.0;        // polynomial exponent
  double gamma = 0.0;    // exponential rate (0 unless Bilateral)
  double constant = 1.0; // limiting prefactor (Theta_0 for SlowDecay)
  double residual_rms = 0.0;
  std::vector<double> residuals;
  double slow_exponent_fitted = 0.0;  // SlowDecay only: free-exponent fit
};

struct FitOptions {
  double poor_fit_rms = 0.05;
};

DecayEstimate fit_decay(const ZSurface& zs, double x, const RegimeTag& regime,
                        std::pair<double, double> window, const FitOptions& fopt = {});

}  // namespace penalab
