#pragma once

#include <cstdint>
#include <optional>

#include "penalab/bessel.hpp"
#include "penalab/common.hpp"
#include "penalab/feynman_kac.hpp"
#include "penalab/sturm.hpp"

namespace penalab {

// ---------------------------------------------------------------------------
// The limiting h-transformed diffusion dX = dB + (phi'/phi)(X) dt, with the
// drift tabulated from a PhiProfile and extended beyond the grid by the
// regime's asymptote. bessel_mu adds the radial term (2mu+1)/(2X) with a
// reflected Euler proposal.
// ---------------------------------------------------------------------------

struct DiffusionSpec {
  PhiProfile phi;
  double x0 = 0.0;
  double dt = 1e-3;
  double t_max = 1.0;
  std::optional<double> bessel_mu;
};

// Euler-Maruyama endpoints at the requested times (paths are not stored in
// full; bundle rows hold the recorded times only).
PathBundle simulate(const DiffusionSpec& spec, std::size_t n_paths,
                    std::uint64_t seed, std::vector<double> record_times = {});

// ---------------------------------------------------------------------------
// h-transform identity: e^{gamma0 t/2} Z_t^V(x) = phi(x) E[1/phi(X_t)].
// ---------------------------------------------------------------------------

struct HTransformReport {
  double t = 0.0, x = 0.0;
  double z_lhs = 0.0;         // e^{gamma0 t/2} Z_t^V(x) from the PDE
  double rhs_mean = 0.0;      // phi(x) E[1/phi(X_t)] from simulation
  double rhs_stderr = 0.0;
  bool agrees(double n_sigma = 3.0, double extra = 0.0) const {
    return std::abs(z_lhs - rhs_mean) <= n_sigma * rhs_stderr + extra;
  }
};

HTransformReport h_transform_check(const RadonPotential& v, const PhiProfile& phi,
                                   double x, double t, std::size_t n_paths,
                                   std::uint64_t seed, double dt,
                                   const PdeOptions& pde_opt);
HTransformReport h_transform_check(const SignedPotential& v, const PhiProfile& phi,
                                   double x, double t, std::size_t n_paths,
                                   std::uint64_t seed, double dt,
                                   const PdeOptions& pde_opt);

// ---------------------------------------------------------------------------
// Scale data: s(x) = int dy/phi^2 with closed-form affine tails; transience
// probabilities p_plus/p_minus for the Integrable regime.
// ---------------------------------------------------------------------------

struct ScaleData {
  double rho = 0.0;        // int_R dy/phi^2
  double p_plus = 0.0;     // P(X_t -> +inf)
  double p_minus = 0.0;
  std::vector<double> s_grid, s_values;
};

ScaleData exit_probabilities(const PhiProfile& phi, double x);

// Monte Carlo fraction of first exits through +L (vs -L) from x0.
McResult exit_right_fraction_mc(const PhiProfile& phi, double x0, double L,
                                std::size_t n_paths, std::uint64_t seed,
                                double dt_base);

// ---------------------------------------------------------------------------
// Invariant density chi-square check for recurrent regimes (phi^2 integrable).
// n_samples independent paths, each run for burn_in time units.
// ---------------------------------------------------------------------------

struct InvariantDensityReport {
  double chi_square = 0.0;
  std::size_t dof = 0;
  double threshold_99 = 0.0;  // 0.99 quantile of chi^2_dof
  std::vector<double> bin_edges;
  std::vector<double> observed, expected;
  bool passes() const { return chi_square < threshold_99; }
};

InvariantDensityReport invariant_density_check(const DiffusionSpec& spec,
                                               double burn_in,
                                               std::size_t n_samples,
                                               std::uint64_t seed,
                                               std::size_t n_bins = 32);

// ---------------------------------------------------------------------------
// Bang-bang law: |X_t| from the sgn-drift diffusion vs S_t - B_t for the
// drifted Brownian motion, two-sample Kolmogorov-Smirnov with independent
// seeds. The (S, B) pair is sampled exactly via the bridge maximum.
// ---------------------------------------------------------------------------

struct KsReport {
  double statistic = 0.0;
  double p_value = 0.0;
  std::size_t n = 0, m = 0;
};

KsReport bang_bang_identity_check(double lambda, double t, std::size_t n_paths,
                                  std::uint64_t seed, double dt = 1e-3);

double ks_p_value(double d, std::size_t n, std::size_t m);

}  // namespace penalab
