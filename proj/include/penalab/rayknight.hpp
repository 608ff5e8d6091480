#pragma once

#include <cstdint>

#include "penalab/bessel.hpp"
#include "penalab/common.hpp"
#include "penalab/potential.hpp"

namespace penalab {

// ---------------------------------------------------------------------------
// Levy exponents of the BESQ Laplace functionals: for a compactly supported
// measure lambda on [0, inf), Q_x^(delta)[exp(-<Y,lambda>)] =
// exp(-x M - delta N) where M = -phi'(0)/2, N = -ln(phi(inf))/2 and phi solves
// (1/2) phi'' = phi lambda(dx), phi(0)=1, 0 <= phi <= 1.
// ---------------------------------------------------------------------------

struct LevyExponents {
  double M = 0.0;
  double N = 0.0;
  double phi_inf = 1.0;
  double phi_prime0 = 0.0;
};

LevyExponents phi_lambda(const RadonPotential& v_half_line);

// ---------------------------------------------------------------------------
// The Ray-Knight limit constant H(V) for compactly supported V, from the
// half-line exponents of V+ and V-.
//
// Weight convention: H(V) belongs to the unhalved weight exp(-int L^y V(dy)),
// while the Feynman-Kac module normalizes by exp(-1/2 int L^y V(dy)). The
// cross-pipeline identity therefore carries the doubled measure:
//     sqrt(2/pi) H(V) = phi_{2V}(0).
// ---------------------------------------------------------------------------

struct HValue {
  double h = 0.0;
  double M_plus = 0.0, M_minus = 0.0;
  double N_plus = 0.0, N_minus = 0.0;
  bool symmetric = false;
  bool divergent = false;   // V -> 0 limit: M -> 0, H -> infinity
  double std_error = 0.0;   // Mc mode only
};

enum class HMode { Formula, Integral, Mc };

struct HMcOptions {
  std::size_t n_paths = 4000;   // per quadrature node and BESQ variant
  std::size_t n_nodes = 16;     // Gauss-Legendre nodes of the l-integral
  double ds = 0.01;             // BESQ sampling resolution in the space variable
  std::uint64_t seed = 1;
};

HValue h_of_v(const RadonPotential& v, HMode mode, const HMcOptions& mc = {});

// Estimate of Q_x^(delta)[exp(-<Y,lambda>)] by BESQ sampling and quadrature of
// <Y,lambda> along the path; target exp(-x M - delta N).
McResult besq_laplace_mc(double delta, double x0, const RadonPotential& v_measure,
                         std::size_t n_paths, std::uint64_t seed, double ds = 0.01);

}  // namespace penalab
