#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "penalab/common.hpp"
#include "penalab/potential.hpp"

namespace penalab {

// ---------------------------------------------------------------------------
// PhiProfile: a Sturm-Liouville solution phi > 0 on a grid, with one-sided
// derivatives at atom locations and enough asymptotic metadata to extend the
// drift phi'/phi beyond the grid.
// ---------------------------------------------------------------------------

struct PhiKink {
  std::size_t index;   // grid node carrying the derivative jump
  double d_left;
  double d_right;
};

enum class EdgeKind {
  Affine,       // phi affine beyond the edge: value + slope*(x - edge)
  ExpDecay,     // phi ~ value * exp(-rate * |x - edge|)
  StretchedExp, // phi ~ C * exp(-cprime * x^{1-alpha}) on the right
};

struct EdgeAsym {
  EdgeKind kind = EdgeKind::Affine;
  double edge_x = 0.0;
  double value = 1.0;   // phi at the edge
  double slope = 0.0;   // Affine: phi' at the edge
  double rate = 0.0;    // ExpDecay rate, or StretchedExp C'
  double alpha = 0.0;   // StretchedExp exponent
  double scale_c = 0.0; // StretchedExp C
};

struct PhiProfile {
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> derivs;
  std::vector<PhiKink> kinks;
  RegimeTag regime;
  double gamma_shift = 0.0;   // 0 except Bilateral, where it is gamma0
  EdgeAsym left_asym, right_asym;

  double value_at(double x) const;   // interpolation + asymptotic extension
  double deriv_at(double x) const;
  double drift_at(double x) const;   // phi'/phi with edge extension
};

// Builds a profile by sampling analytic callables (used by the catalogue and
// by tests). kink_locations lists points where phi' jumps.
PhiProfile make_profile_from_functions(
    const std::vector<double>& grid, const std::function<double(double)>& value,
    const std::function<double(double)>& deriv_left,
    const std::function<double(double)>& deriv_right,
    const std::vector<double>& kink_locations, RegimeTag regime);

struct EigenResult {
  double gamma0 = 0.0;
  std::vector<std::pair<double, double>> mismatch_trace;  // (gamma, mismatch)
  PhiProfile phi;
};

// ---------------------------------------------------------------------------
// Solvers. Infinite-line boundary conditions are imposed at truncation points
// where either V's remaining mass or the decay envelope is below 1e-12;
// integration always shoots inward from the affine/decaying ends.
// ---------------------------------------------------------------------------

struct SturmOptions {
  double step = 1e-3;          // RK4 step target inside supp(V)
  double margin = 1.0;         // required domain margin beyond supp(V)
  double match_tol = 1e-9;     // anchor matching tolerance (relative)
  double envelope_log = 30.0;  // WKB envelope: integrate sqrt(V) until this
};

PhiProfile solve_integrable_bvp(const RadonPotential& v,
                                std::pair<double, double> domain, std::size_t n,
                                const SturmOptions& opt = {});

PhiProfile solve_unilateral_bvp(const RadonPotential& v,
                                std::pair<double, double> domain, std::size_t n,
                                const SturmOptions& opt = {});

EigenResult solve_bilateral_eigen(const RadonPotential& v,
                                  std::pair<double, double> bracket, double tol,
                                  const SturmOptions& opt = {});

// Quadrature of phi against V (density part + atoms); used by the
// normalization identity sqrt(2*pi) * int phi_V dV = 4.
double integral_phi_dV(const PhiProfile& phi, const RadonPotential& v);

// Serializes (x, phi, dphi) rows.
std::string profile_to_csv(const PhiProfile& phi);

// ---------------------------------------------------------------------------
// Closed-form catalogue: every displayed phi_V / V_phi from the worked
// examples, used as ground truth by the tests and exposed on the CLI.
// ---------------------------------------------------------------------------

using FormulaParams = std::map<std::string, double>;

double closed_form_oracle(const std::string& formula_id, const FormulaParams& params,
                          double x);

struct CatalogueEntry {
  std::string id;
  std::string description;
  std::vector<std::string> params;
};

const std::vector<CatalogueEntry>& formula_catalogue();

// The tan-equation root gamma0 for the step-well potential 1_{|x|>a}.
double bilateral_gamma0_root(double a);

}  // namespace penalab
