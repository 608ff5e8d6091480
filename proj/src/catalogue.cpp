#include "penalab/catalogue.hpp"

#include <cmath>

namespace penalab {

namespace {

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

TailFlags compact_tails() {
  TailFlags t;
  t.left_first_moment_finite = true;
  t.right_first_moment_finite = true;
  t.left_limit = TailLimit::Zero;
  t.right_limit = TailLimit::Zero;
  return t;
}

}  // namespace

RadonPotential make_box_potential(double gamma, double a, double b) {
  if (!(a < b) || gamma <= 0.0) throw InvalidArgument("box potential needs a<b, gamma>0");
  RadonPotential v;
  double g2 = gamma * gamma;
  v.grid = linspace(a, b, 33);
  v.density.assign(v.grid.size(), g2);
  v.density_fn = [g2, a, b](double x) { return (x >= a && x <= b) ? g2 : 0.0; };
  v.breakpoints = {a, b};
  v.support_bounds = {{a, b}};
  v.tails = compact_tails();
  return v;
}

RadonPotential make_two_atom_potential(double gamma, double a, double b) {
  if (!(a <= b) || gamma <= 0.0)
    throw InvalidArgument("two-atom potential needs a<=b, gamma>0");
  std::vector<Atom> atoms;
  if (a == b) {
    atoms.push_back({a, 2.0 * gamma * gamma});
  } else {
    atoms.push_back({a, gamma * gamma});
    atoms.push_back({b, gamma * gamma});
  }
  return make_atoms_potential(atoms);
}

RadonPotential make_atoms_potential(const std::vector<Atom>& atoms) {
  if (atoms.empty()) throw InvalidArgument("need at least one atom");
  RadonPotential v;
  double lo = atoms.front().location, hi = atoms.front().location;
  for (const Atom& a : atoms) {
    lo = std::min(lo, a.location);
    hi = std::max(hi, a.location);
  }
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  v.grid = {lo, hi};
  v.density = {0.0, 0.0};
  v.atoms = atoms;
  std::sort(v.atoms.begin(), v.atoms.end(),
            [](const Atom& x, const Atom& y) { return x.location < y.location; });
  v.support_bounds = {{lo, hi}};
  v.tails = compact_tails();
  return v;
}

RadonPotential make_triangle_potential(double c, double w, double h) {
  if (w <= 0.0 || h <= 0.0) throw InvalidArgument("triangle needs w>0, h>0");
  RadonPotential v;
  v.grid = {c - w, c, c + w};
  v.density = {0.0, h, 0.0};
  v.density_fn = [c, w, h](double x) {
    double d = std::abs(x - c);
    return d >= w ? 0.0 : h * (1.0 - d / w);
  };
  v.breakpoints = {c - w, c, c + w};
  v.support_bounds = {{c - w, c + w}};
  v.tails = compact_tails();
  return v;
}

RadonPotential make_halfline_potential(double lambda) {
  if (lambda <= 0.0) throw InvalidArgument("half-line potential needs lambda>0");
  RadonPotential v;
  double l2 = lambda * lambda;
  v.grid = linspace(0.0, 40.0 / lambda, 65);
  v.density.assign(v.grid.size(), l2);
  v.density_fn = [l2](double x) { return x >= 0.0 ? l2 : 0.0; };
  v.breakpoints = {0.0};
  TailFlags t;
  t.left_first_moment_finite = true;
  t.left_limit = TailLimit::Zero;
  t.right_limit = TailLimit::Finite;
  t.right_limit_value = l2;
  t.right_power_alpha = 0.0;
  v.tails = t;
  return v;
}

RadonPotential make_quadratic_tail_potential() {
  RadonPotential v;
  v.grid = linspace(1.0, 12.0, 45);
  v.density.resize(v.grid.size());
  for (std::size_t i = 0; i < v.grid.size(); ++i)
    v.density[i] = v.grid[i] * v.grid[i] - 1.0;
  v.density_fn = [](double x) { return x >= 1.0 ? x * x - 1.0 : 0.0; };
  v.breakpoints = {1.0};
  TailFlags t;
  t.left_first_moment_finite = true;
  t.left_limit = TailLimit::Zero;
  t.right_limit = TailLimit::Infinite;
  t.right_power_alpha = 0.0;
  v.tails = t;
  return v;
}

RadonPotential make_step_well_potential(double a) {
  if (a <= 0.0) throw InvalidArgument("step well needs a>0");
  RadonPotential v;
  v.grid = linspace(-a - 4.0, a + 4.0, 81);
  v.density.resize(v.grid.size());
  for (std::size_t i = 0; i < v.grid.size(); ++i)
    v.density[i] = std::abs(v.grid[i]) > a ? 1.0 : 0.0;
  v.density_fn = [a](double x) { return std::abs(x) > a ? 1.0 : 0.0; };
  v.breakpoints = {-a, a};
  TailFlags t;
  t.left_limit = TailLimit::Finite;
  t.right_limit = TailLimit::Finite;
  t.left_limit_value = 1.0;
  t.right_limit_value = 1.0;
  v.tails = t;
  return v;
}

RadonPotential make_critical_potential(double lambda, double theta,
                                       double grid_half_width) {
  if (lambda <= 0.0 || theta < 0.0)
    throw InvalidArgument("critical potential needs lambda>0, theta>=0");
  RadonPotential v;
  v.grid = linspace(-grid_half_width, grid_half_width, 201);
  v.density.resize(v.grid.size());
  for (std::size_t i = 0; i < v.grid.size(); ++i)
    v.density[i] = lambda / (theta + v.grid[i] * v.grid[i]);
  v.density_fn = [lambda, theta](double x) { return lambda / (theta + x * x); };
  TailFlags t;
  t.critical_lambda = lambda;
  t.critical_theta = theta;
  v.tails = t;
  return v;
}

RadonPotential make_slow_decay_potential(double lambda, double alpha,
                                         double grid_half_width) {
  if (lambda <= 0.0 || !(alpha > 0.0 && alpha < 2.0))
    throw InvalidArgument("slow-decay potential needs lambda>0, 0<alpha<2");
  RadonPotential v;
  v.grid = linspace(-grid_half_width, grid_half_width, 201);
  v.density.resize(v.grid.size());
  for (std::size_t i = 0; i < v.grid.size(); ++i)
    v.density[i] = lambda / (1.0 + std::pow(std::abs(v.grid[i]), alpha));
  v.density_fn = [lambda, alpha](double x) {
    return lambda / (1.0 + std::pow(std::abs(x), alpha));
  };
  TailFlags t;
  t.slow_decay_alpha = alpha;
  t.slow_decay_lambda = lambda;
  v.tails = t;
  return v;
}

PhiProfile catalogue_phi_profile(const std::string& id, const FormulaParams& params,
                                 std::pair<double, double> domain, std::size_t n) {
  auto value = [&](double x) { return closed_form_oracle(id, params, x); };
  std::vector<double> grid = linspace(domain.first, domain.second, n);

  auto fd = [&](double x, double side) {
    double h = 1e-6;
    return (value(x + side * h) - value(x)) / (side * h);
  };

  if (id == "ex3.2") {
    auto p = make_profile_from_functions(
        grid, value, [&](double x) { return -x * std::exp(-0.5 * x * x); },
        [&](double x) { return -x * std::exp(-0.5 * x * x); }, {},
        RegimeTag::small_phi());
    p.left_asym = {EdgeKind::StretchedExp, p.grid.front(), p.values.front(), 0, 0.5,
                   -1.0, 1.0};
    p.right_asym = {EdgeKind::StretchedExp, p.grid.back(), p.values.back(), 0, 0.5,
                    -1.0, 1.0};
    return p;
  }
  if (id == "ex3.4") {
    double a = params.count("a") ? params.at("a") : 0.0;
    auto deriv = [&](double x) {
      if (std::abs(x) > a) return -std::exp(-std::abs(x)) * (x > 0 ? 1.0 : -1.0);
      return -std::exp(-a) * (x > 0 ? 1.0 : -1.0);
    };
    auto dl = [&](double x) { return x == 0.0 ? std::exp(-a) : deriv(x); };
    auto dr = [&](double x) { return x == 0.0 ? -std::exp(-a) : deriv(x); };
    auto p = make_profile_from_functions(grid, value, dl, dr, {0.0},
                                         RegimeTag::small_phi());
    p.left_asym = {EdgeKind::ExpDecay, p.grid.front(), p.values.front(), 0, 1.0, 0, 0};
    p.right_asym = {EdgeKind::ExpDecay, p.grid.back(), p.values.back(), 0, 1.0, 0, 0};
    return p;
  }
  if (id == "ex3.5") {
    double lam = params.count("lambda") ? params.at("lambda") : 1.0;
    auto dl = [&](double x) {
      return x == 0.0 ? lam : -lam * std::exp(-lam * std::abs(x)) * (x > 0 ? 1.0 : -1.0);
    };
    auto dr = [&](double x) {
      return x == 0.0 ? -lam : -lam * std::exp(-lam * std::abs(x)) * (x > 0 ? 1.0 : -1.0);
    };
    auto p = make_profile_from_functions(grid, value, dl, dr, {0.0},
                                         RegimeTag::small_phi());
    p.left_asym = {EdgeKind::ExpDecay, p.grid.front(), p.values.front(), 0, lam, 0, 0};
    p.right_asym = {EdgeKind::ExpDecay, p.grid.back(), p.values.back(), 0, lam, 0, 0};
    return p;
  }
  if (id == "ex8.1") {
    double a = params.count("a") ? params.at("a") : 1.0;
    double g0 = bilateral_gamma0_root(a);
    RegimeTag tag;
    tag.regime = Regime::Bilateral;
    tag.k = 0.0;
    tag.gamma0 = g0;
    auto p = make_profile_from_functions(
        grid, value, [&](double x) { return fd(x, -1.0); },
        [&](double x) { return fd(x, 1.0); }, {}, tag);
    p.gamma_shift = g0;
    double rate = std::sqrt(1.0 - g0);
    p.left_asym = {EdgeKind::ExpDecay, p.grid.front(), p.values.front(), 0, rate, 0, 0};
    p.right_asym = {EdgeKind::ExpDecay, p.grid.back(), p.values.back(), 0, rate, 0, 0};
    return p;
  }
  // integrable / unilateral displayed profiles: finite differences suffice for
  // the derivative samples away from kinks.
  RegimeTag tag = RegimeTag::integrable();
  std::vector<double> kinks;
  if (id == "ex5.1") {
    tag = RegimeTag::unilateral(0.0);
  } else if (id == "ex5.2") {
    tag = RegimeTag::unilateral(0.0);
  } else if (id == "ex4.2") {
    double a = params.count("a") ? params.at("a") : -1.0;
    double b = params.count("b") ? params.at("b") : 1.0;
    kinks = {a, b};
  }
  auto p = make_profile_from_functions(
      grid, value, [&](double x) { return fd(x, -1.0); },
      [&](double x) { return fd(x, 1.0); }, kinks, tag);
  if (id == "ex5.1") {
    double lam = params.count("lambda") ? params.at("lambda") : 1.0;
    p.right_asym = {EdgeKind::ExpDecay, p.grid.back(), p.values.back(), 0, lam, 0, 0};
    p.left_asym = {EdgeKind::Affine, p.grid.front(), p.values.front(), -kSqrt2OverPi,
                   0, 0, 0};
  } else if (id == "ex5.2") {
    p.right_asym = {EdgeKind::StretchedExp, p.grid.back(), p.values.back(), 0, 0.5,
                    -1.0, kSqrt2OverPi * std::exp(0.5)};
    p.left_asym = {EdgeKind::Affine, p.grid.front(), p.values.front(), -kSqrt2OverPi,
                   0, 0, 0};
  }
  return p;
}

RadonPotential catalogue_potential(const std::string& id, const FormulaParams& p) {
  auto get = [&](const std::string& k, double def) {
    return p.count(k) ? p.at(k) : def;
  };
  if (id == "ex4.1") return make_box_potential(get("gamma", 1.0), get("a", -1.0), get("b", 1.0));
  if (id == "ex4.2")
    return make_two_atom_potential(get("gamma", 1.0), get("a", -1.0), get("b", 1.0));
  if (id == "ex5.1") return make_halfline_potential(get("lambda", 1.0));
  if (id == "ex5.2") return make_quadratic_tail_potential();
  if (id == "ex8.1") return make_step_well_potential(get("a", 1.0));
  throw UnknownFormula("no potential builder for '" + id + "'");
}

SignedPotential make_smallphi_potential(const std::string& id, const FormulaParams& params,
                                        double grid_half_width, std::size_t n) {
  if (id != "ex3.2" && id != "ex3.4" && id != "ex3.5")
    throw UnknownFormula("not a small-phi catalogue id: " + id);
  PhiProfile phi = catalogue_phi_profile(id, params, {-grid_half_width, grid_half_width}, n);
  SignedPotential v = potential_from_phi(phi);
  // Exact density evaluators for the displayed V_phi.
  if (id == "ex3.2") {
    v.density_fn = [](double x) { return x * x - 1.0; };
  } else if (id == "ex3.4") {
    double a = params.count("a") ? params.at("a") : 0.0;
    v.density_fn = [a](double x) { return std::abs(x) > a ? 1.0 : 0.0; };
    v.breakpoints = {-a, 0.0, a};
  } else if (id == "ex3.5") {
    double lam = params.count("lambda") ? params.at("lambda") : 1.0;
    v.density_fn = [lam](double x) {
      (void)x;
      return lam * lam;
    };
  }
  return v;
}

}  // namespace penalab
