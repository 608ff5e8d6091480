#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "penalab/common.hpp"

namespace penalab {

// ---------------------------------------------------------------------------
// Regimes: the tail class of V fixes the decay law of Z_t^V.
// ---------------------------------------------------------------------------

enum class Regime {
  SmallPhi,        // k = 0; V = phi''/phi for phi small at infinity
  Integrable,      // k = 1/2; int (1+|x|) V(dx) < inf
  Unilateral,      // k = 1/2; left tail integrable, right tail large
  CriticalBessel,  // k = n_mu; V = lambda/(theta + x^2)
  SlowDecay,       // log-rate exponent (alpha-2)/(alpha+2); V ~ lambda/(1+|x|^alpha)
  Bilateral,       // rate gamma0; V even, nondecreasing, bounded
};

struct RegimeTag {
  Regime regime = Regime::Integrable;
  double k = 0.5;                 // polynomial exponent of t^-k
  double gamma0 = 0.0;            // Bilateral only (0 until the eigenproblem is solved)
  double log_rate_exponent = 0.0; // SlowDecay only: (alpha-2)/(alpha+2)
  double alpha = 0.0;             // tail exponent where declared
  double lambda = 0.0;            // coupling for CriticalBessel / SlowDecay
  double theta = 0.0;             // CriticalBessel shift

  static RegimeTag small_phi() { return {Regime::SmallPhi, 0.0, 0, 0, 0, 0, 0}; }
  static RegimeTag integrable() { return {Regime::Integrable, 0.5, 0, 0, 0, 0, 0}; }
  static RegimeTag unilateral(double alpha_) {
    return {Regime::Unilateral, 0.5, 0, 0, alpha_, 0, 0};
  }
};

const char* regime_name(Regime r);

// ---------------------------------------------------------------------------
// RadonPotential: density on a grid plus Dirac atoms, with declared tail
// metadata. Tail behaviour cannot be inferred from a finite grid, so the
// asymptotic hypotheses live in TailFlags and are only sanity-checked against
// the outermost decade of the grid.
// ---------------------------------------------------------------------------

enum class TailLimit { Zero, Finite, Infinite };

struct TailFlags {
  bool left_first_moment_finite = false;
  bool right_first_moment_finite = false;
  TailLimit left_limit = TailLimit::Zero;   // limit of the density part at -inf
  TailLimit right_limit = TailLimit::Zero;
  double left_limit_value = 0.0;            // meaningful when the limit is Finite
  double right_limit_value = 0.0;
  // Declared asymptotic forms (all optional):
  std::optional<double> right_power_alpha;  // liminf x^{2a} V(x) > 0, a < 1
  std::optional<double> slow_decay_alpha;   // V ~ lambda/(1+|x|^alpha), 0<alpha<2
  std::optional<double> slow_decay_lambda;
  std::optional<double> critical_lambda;    // V = lambda/(theta+x^2)
  std::optional<double> critical_theta;
};

struct Atom {
  double location = 0.0;
  double mass = 0.0;
};

struct RadonPotential {
  std::vector<double> grid;      // strictly increasing
  std::vector<double> density;   // >= 0, sampled at grid nodes
  std::vector<Atom> atoms;       // sorted by location, masses >= 0
  TailFlags tails;
  std::optional<std::pair<double, double>> support_bounds;
  // Optional exact evaluator; falls back to linear interpolation of the
  // samples (0 outside the grid hull). breakpoints lists density kinks or
  // jumps so ODE/PDE steps can be aligned with them.
  std::function<double(double)> density_fn;
  std::vector<double> breakpoints;

  double density_at(double x) const;
  bool has_density() const;
  double total_atom_mass() const;
};

// Same shape, but density values and atom masses may be negative. Constructed
// by potential_from_phi (and the catalogue wrappers around it).
struct SignedPotential {
  std::vector<double> grid;
  std::vector<double> density;
  std::vector<Atom> atoms;
  std::function<double(double)> density_fn;
  std::vector<double> breakpoints;

  double density_at(double x) const;
};

// ---------------------------------------------------------------------------
// Diagnostics from validate().
// ---------------------------------------------------------------------------

enum class DiagnosticCode {
  GridNotSorted,
  NegativeDensity,
  NegativeAtomMass,
  EmptyPotential,
  AtomOutsideHull,
  SupportViolated,
  NonFiniteValue,
};

struct Diagnostic {
  DiagnosticCode code;
  std::string message;
};

std::vector<Diagnostic> validate(const RadonPotential& v);

// Classifies into the asymptotic regime; never guesses. Throws
// UnclassifiablePotential when tail metadata is absent or contradicts the
// sampled grid.
RegimeTag classify_regime(const RadonPotential& v);

// ---------------------------------------------------------------------------
// V_phi = phi''(dx)/phi(x) from a profile (forward declaration of the profile
// lives in sturm.hpp; the operation is implemented there to avoid a cycle).
// ---------------------------------------------------------------------------

struct PhiProfile;
SignedPotential potential_from_phi(const PhiProfile& phi);

}  // namespace penalab
