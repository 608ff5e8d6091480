#pragma once

#include <string>
#include <variant>

#include "penalab/potential.hpp"
#include "penalab/sturm.hpp"

namespace penalab {

// Builders for the worked-example potentials and a few generic shapes.
// Formula-id'd potentials carry exact density evaluators, breakpoints and the
// tail metadata needed by classify_regime.

// gamma^2 * 1_[a,b](x) dx
RadonPotential make_box_potential(double gamma, double a, double b);
// gamma^2 (delta_a + delta_b)
RadonPotential make_two_atom_potential(double gamma, double a, double b);
// generic atom list
RadonPotential make_atoms_potential(const std::vector<Atom>& atoms);
// triangle density: peak at c, support [c-w, c+w], height h
RadonPotential make_triangle_potential(double c, double w, double h);
// lambda^2 * 1_[0,inf)(x) dx   (unilateral, Example 5.1)
RadonPotential make_halfline_potential(double lambda);
// (y^2-1) 1_{y>=1} dy          (unilateral, Example 5.2)
RadonPotential make_quadratic_tail_potential();
// 1_{|x|>a} dx                 (bilateral, Example 8.1)
RadonPotential make_step_well_potential(double a);
// lambda/(theta+x^2) dx        (critical, section on Bessel-type tails)
RadonPotential make_critical_potential(double lambda, double theta,
                                       double grid_half_width = 50.0);
// lambda/(1+|x|^alpha) dx      (slow decay)
RadonPotential make_slow_decay_potential(double lambda, double alpha,
                                         double grid_half_width = 50.0);

// Signed potentials V_phi = phi''/phi for the "phi small at infinity" family;
// built through potential_from_phi from the displayed profiles.
// ex3.2: phi = exp(-x^2/2)      -> density x^2 - 1
// ex3.4: tent-capped exponential -> 1_{|x|>a} dx - 2/(1+a) delta_0
// ex3.5: phi = exp(-lambda|x|)  -> lambda^2 dx - 2 lambda delta_0
SignedPotential make_smallphi_potential(const std::string& formula_id,
                                        const FormulaParams& params,
                                        double grid_half_width = 12.0,
                                        std::size_t n = 4801);

// The displayed phi for a formula id, as a profile on a grid (with exact
// values/derivatives and kink markers).
PhiProfile catalogue_phi_profile(const std::string& formula_id,
                                 const FormulaParams& params,
                                 std::pair<double, double> domain, std::size_t n);

// Builds the potential belonging to a formula id ("ex4.1", "ex4.2", "ex5.1",
// "ex5.2", "ex8.1"); throws UnknownFormula otherwise.
RadonPotential catalogue_potential(const std::string& formula_id,
                                   const FormulaParams& params);

}  // namespace penalab
