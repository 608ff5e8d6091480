#include "penalab/potential.hpp"

#include <algorithm>
#include <cmath>

#include "penalab/sturm.hpp"

namespace penalab {

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::SmallPhi: return "small-phi";
    case Regime::Integrable: return "integrable";
    case Regime::Unilateral: return "unilateral";
    case Regime::CriticalBessel: return "critical-bessel";
    case Regime::SlowDecay: return "slow-decay";
    case Regime::Bilateral: return "bilateral";
  }
  return "?";
}

namespace {

double interp_density(const std::vector<double>& grid, const std::vector<double>& density,
                      double x) {
  if (grid.empty()) return 0.0;
  if (x < grid.front() || x > grid.back()) return 0.0;
  return lerp_clamped(grid, density, x);
}

}  // namespace

double RadonPotential::density_at(double x) const {
  if (density_fn) return density_fn(x);
  return interp_density(grid, density, x);
}

bool RadonPotential::has_density() const {
  if (density_fn) return true;
  for (double d : density)
    if (d != 0.0) return true;
  return false;
}

double RadonPotential::total_atom_mass() const {
  double s = 0.0;
  for (const Atom& a : atoms) s += a.mass;
  return s;
}

double SignedPotential::density_at(double x) const {
  if (density_fn) return density_fn(x);
  return interp_density(grid, density, x);
}

std::vector<Diagnostic> validate(const RadonPotential& v) {
  std::vector<Diagnostic> out;
  auto add = [&](DiagnosticCode c, std::string m) { out.push_back({c, std::move(m)}); };

  for (std::size_t i = 1; i < v.grid.size(); ++i)
    if (!(v.grid[i] > v.grid[i - 1])) {
      add(DiagnosticCode::GridNotSorted, "grid must be strictly increasing");
      break;
    }
  if (v.density.size() != v.grid.size())
    add(DiagnosticCode::NonFiniteValue, "density/grid size mismatch");

  bool any_mass = false;
  for (std::size_t i = 0; i < std::min(v.grid.size(), v.density.size()); ++i) {
    double d = v.density[i];
    if (!std::isfinite(d)) {
      add(DiagnosticCode::NonFiniteValue, "non-finite density value");
      break;
    }
    if (d < 0.0) {
      add(DiagnosticCode::NegativeDensity, "density must be >= 0");
      break;
    }
    if (d > 0.0) any_mass = true;
  }
  if (v.density_fn) any_mass = true;

  for (const Atom& a : v.atoms) {
    if (!std::isfinite(a.mass) || !std::isfinite(a.location)) {
      add(DiagnosticCode::NonFiniteValue, "non-finite atom");
      continue;
    }
    if (a.mass < 0.0) add(DiagnosticCode::NegativeAtomMass, "atom mass must be >= 0");
    if (a.mass > 0.0) any_mass = true;
    if (!v.grid.empty() && (a.location < v.grid.front() || a.location > v.grid.back()))
      add(DiagnosticCode::AtomOutsideHull, "atom outside the grid hull");
  }
  if (!any_mass) add(DiagnosticCode::EmptyPotential, "potential is identically zero");

  if (v.support_bounds) {
    auto [lo, hi] = *v.support_bounds;
    for (std::size_t i = 0; i < std::min(v.grid.size(), v.density.size()); ++i)
      if ((v.grid[i] < lo || v.grid[i] > hi) && v.density[i] != 0.0) {
        add(DiagnosticCode::SupportViolated, "density outside declared support");
        break;
      }
    for (const Atom& a : v.atoms)
      if (a.location < lo || a.location > hi) {
        add(DiagnosticCode::SupportViolated, "atom outside declared support");
        break;
      }
  }
  return out;
}

namespace {

bool grid_consistent_with_power_tail(const RadonPotential& v, double alpha) {
  // Sanity check over the outermost decade of the right grid: x^{2a} V(x)
  // should stay bounded away from 0 where the density is sampled.
  if (v.grid.empty()) return true;
  double hi = v.grid.back();
  if (hi <= 1.0) return true;
  double lo = std::max(1.0, hi / 10.0);
  int checked = 0;
  for (double x = lo; x <= hi; x += (hi - lo) / 8.0 + 1e-12) {
    double val = std::pow(x, 2.0 * alpha) * v.density_at(x);
    ++checked;
    if (val <= 0.0) return false;
  }
  return checked > 0;
}

bool grid_even_nondecreasing(const RadonPotential& v, double tol) {
  if (!v.atoms.empty()) return false;
  double hi = v.grid.empty() ? 1.0 : std::max(std::abs(v.grid.front()), v.grid.back());
  double prev = v.density_at(0.0);
  const int kProbes = 64;
  for (int i = 1; i <= kProbes; ++i) {
    double x = hi * static_cast<double>(i) / kProbes;
    double dp = v.density_at(x), dm = v.density_at(-x);
    if (std::abs(dp - dm) > tol * (1.0 + std::abs(dp))) return false;
    if (dp < prev - tol * (1.0 + std::abs(dp))) return false;
    prev = dp;
  }
  return true;
}

}  // namespace

RegimeTag classify_regime(const RadonPotential& v) {
  auto diags = validate(v);
  if (!diags.empty())
    throw InvalidArgument("classify_regime: invalid potential: " + diags.front().message);
  const TailFlags& t = v.tails;

  int declared_forms = (t.critical_lambda ? 1 : 0) + (t.slow_decay_alpha ? 1 : 0);
  if (declared_forms > 1)
    throw UnclassifiablePotential("multiple declared asymptotic forms");

  if (t.critical_lambda) {
    double lambda = *t.critical_lambda;
    double theta = t.critical_theta.value_or(0.0);
    if (lambda <= 0.0 || theta < 0.0)
      throw UnclassifiablePotential("critical form needs lambda>0, theta>=0");
    // Brownian motion is the Bessel process with index mu = -1/2.
    double mu = -0.5;
    double n = 0.5 * (-mu + std::sqrt(mu * mu + lambda));
    RegimeTag tag;
    tag.regime = Regime::CriticalBessel;
    tag.k = n;
    tag.lambda = lambda;
    tag.theta = theta;
    return tag;
  }

  if (t.slow_decay_alpha) {
    double alpha = *t.slow_decay_alpha;
    double lambda = t.slow_decay_lambda.value_or(1.0);
    if (!(alpha > 0.0 && alpha < 2.0) || lambda <= 0.0)
      throw UnclassifiablePotential("slow-decay form needs 0<alpha<2, lambda>0");
    RegimeTag tag;
    tag.regime = Regime::SlowDecay;
    tag.k = 0.0;
    tag.log_rate_exponent = (alpha - 2.0) / (alpha + 2.0);
    tag.alpha = alpha;
    tag.lambda = lambda;
    return tag;
  }

  if (t.left_first_moment_finite && t.right_first_moment_finite) {
    if (t.right_limit == TailLimit::Infinite || t.left_limit == TailLimit::Infinite)
      throw UnclassifiablePotential("finite first moment contradicts infinite tail limit");
    if (t.right_limit == TailLimit::Finite && t.right_limit_value > 0.0)
      throw UnclassifiablePotential("finite first moment contradicts nonzero tail limit");
    if (t.left_limit == TailLimit::Finite && t.left_limit_value > 0.0)
      throw UnclassifiablePotential("finite first moment contradicts nonzero tail limit");
    return RegimeTag::integrable();
  }

  if (t.left_first_moment_finite && t.right_power_alpha) {
    double alpha = *t.right_power_alpha;
    if (!(alpha < 1.0))
      throw UnclassifiablePotential("unilateral tail exponent must satisfy alpha < 1");
    if (!grid_consistent_with_power_tail(v, alpha))
      throw UnclassifiablePotential(
          "sampled right tail contradicts declared liminf x^{2a} V(x) > 0");
    return RegimeTag::unilateral(alpha);
  }

  bool limits_finite =
      t.left_limit == TailLimit::Finite && t.right_limit == TailLimit::Finite;
  if (limits_finite && t.left_limit_value == t.right_limit_value &&
      t.right_limit_value > 0.0 && !t.left_first_moment_finite &&
      !t.right_first_moment_finite) {
    if (!grid_even_nondecreasing(v, 1e-9))
      throw UnclassifiablePotential(
          "bilateral regime needs an even density, nondecreasing on [0,inf)");
    RegimeTag tag;
    tag.regime = Regime::Bilateral;
    tag.k = 0.0;
    return tag;
  }

  throw UnclassifiablePotential("tail metadata absent or contradictory");
}

// ---------------------------------------------------------------------------
// V_phi = phi''/phi. Second differences on the (possibly nonuniform) grid;
// a derivative jump becomes an atom of mass (phi'(a+) - phi'(a-))/phi(a).
// ---------------------------------------------------------------------------

SignedPotential potential_from_phi(const PhiProfile& phi) {
  const std::size_t n = phi.grid.size();
  if (n < 3) throw InvalidArgument("potential_from_phi: need at least 3 nodes");
  for (double v : phi.values)
    if (!(v > 0.0)) throw NonPositivePhi("phi must be strictly positive");

  const std::vector<double>& x = phi.grid;
  const std::vector<double>& f = phi.values;

  std::vector<bool> is_kink(n, false);
  SignedPotential out;
  out.grid = x;
  out.density.assign(n, 0.0);

  // Explicit kink markers take precedence.
  for (const PhiKink& k : phi.kinks) {
    if (k.index >= n) throw InvalidArgument("potential_from_phi: kink index out of range");
    is_kink[k.index] = true;
    out.atoms.push_back({x[k.index], (k.d_right - k.d_left) / f[k.index]});
  }

  // One-sided slopes at interior nodes.
  std::vector<double> slope_l(n, 0.0), slope_r(n, 0.0);
  for (std::size_t i = 1; i < n; ++i)
    slope_l[i] = (f[i] - f[i - 1]) / (x[i] - x[i - 1]);
  for (std::size_t i = 0; i + 1 < n; ++i)
    slope_r[i] = (f[i + 1] - f[i]) / (x[i + 1] - x[i]);

  // Smooth second-difference quotient (three-point, nonuniform).
  auto d2 = [&](std::size_t i) {
    double hl = x[i] - x[i - 1], hr = x[i + 1] - x[i];
    return 2.0 * (slope_r[i] - slope_l[i]) / (hl + hr);
  };

  // Detect jumps that no explicit marker covers: one-sided slopes differing
  // by more than 10x the grid-scale tolerance implied by neighbouring
  // curvature.
  if (phi.kinks.empty()) {
    for (std::size_t i = 2; i + 2 < n; ++i) {
      double h = std::max(x[i] - x[i - 1], x[i + 1] - x[i]);
      double curv_scale =
          std::max({std::abs(d2(i - 1)), std::abs(d2(i + 1)), 1e-12 * f[i]});
      double jump = slope_r[i] - slope_l[i];
      if (std::abs(jump) > 10.0 * h * curv_scale) {
        is_kink[i] = true;
        out.atoms.push_back({x[i], jump / f[i]});
      }
    }
  }

  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (is_kink[i]) continue;
    out.density[i] = d2(i) / f[i];
  }
  // Kink nodes and the two edge nodes take the smooth value of a neighbour.
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!is_kink[i]) continue;
    double left = (i >= 2 && !is_kink[i - 1]) ? out.density[i - 1] : 0.0;
    double right = (i + 2 < n && !is_kink[i + 1]) ? out.density[i + 1] : 0.0;
    out.density[i] = 0.5 * (left + right);
  }
  out.density[0] = out.density[1];
  out.density[n - 1] = out.density[n - 2];

  std::sort(out.atoms.begin(), out.atoms.end(),
            [](const Atom& a, const Atom& b) { return a.location < b.location; });
  for (const Atom& a : out.atoms) out.breakpoints.push_back(a.location);
  return out;
}

}  // namespace penalab
