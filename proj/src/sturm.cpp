#include "penalab/sturm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace penalab {

// ---------------------------------------------------------------------------
// PhiProfile interpolation and edge extension
// ---------------------------------------------------------------------------

namespace {

double asym_value(const EdgeAsym& a, double x, bool right_side) {
  switch (a.kind) {
    case EdgeKind::Affine:
      return a.value + a.slope * (x - a.edge_x);
    case EdgeKind::ExpDecay:
      return a.value * std::exp(-a.rate * std::abs(x - a.edge_x));
    case EdgeKind::StretchedExp: {
      double p = 1.0 - a.alpha;
      double u = std::pow(std::abs(x), p) - std::pow(std::abs(a.edge_x), p);
      return a.value * std::exp(-a.rate * u);
    }
  }
  (void)right_side;
  return a.value;
}

double asym_drift(const EdgeAsym& a, double x, bool right_side) {
  double sgn = right_side ? 1.0 : -1.0;
  switch (a.kind) {
    case EdgeKind::Affine: {
      double v = a.value + a.slope * (x - a.edge_x);
      return a.slope / v;
    }
    case EdgeKind::ExpDecay:
      return -sgn * a.rate;
    case EdgeKind::StretchedExp: {
      double p = 1.0 - a.alpha;
      return -sgn * a.rate * p * std::pow(std::abs(x), -a.alpha);
    }
  }
  return 0.0;
}

}  // namespace

namespace {

// Cell-wise cubic Hermite using the stored derivatives; kinks supply the
// correct one-sided slope for their adjacent cells.
struct HermiteCell {
  double v0, v1, d0, d1, h, t;
};

HermiteCell locate_cell(const PhiProfile& p, double x) {
  auto it = std::upper_bound(p.grid.begin(), p.grid.end(), x);
  std::size_t i = it == p.grid.begin() ? 0 : static_cast<std::size_t>(it - p.grid.begin()) - 1;
  if (i + 1 >= p.grid.size()) i = p.grid.size() - 2;
  HermiteCell c;
  c.h = p.grid[i + 1] - p.grid[i];
  c.t = c.h > 0 ? (x - p.grid[i]) / c.h : 0.0;
  c.v0 = p.values[i];
  c.v1 = p.values[i + 1];
  c.d0 = p.derivs[i];
  c.d1 = p.derivs[i + 1];
  for (const PhiKink& k : p.kinks) {
    if (k.index == i) c.d0 = k.d_right;
    if (k.index == i + 1) c.d1 = k.d_left;
  }
  return c;
}

}  // namespace

double PhiProfile::value_at(double x) const {
  if (x < grid.front()) return asym_value(left_asym, x, false);
  if (x > grid.back()) return asym_value(right_asym, x, true);
  HermiteCell c = locate_cell(*this, x);
  double t = c.t, u = 1.0 - t;
  return c.v0 * (1.0 + 2.0 * t) * u * u + c.d0 * c.h * t * u * u +
         c.v1 * t * t * (3.0 - 2.0 * t) + c.d1 * c.h * t * t * (t - 1.0);
}

double PhiProfile::deriv_at(double x) const {
  if (x < grid.front() || x > grid.back()) return drift_at(x) * value_at(x);
  HermiteCell c = locate_cell(*this, x);
  double t = c.t;
  return (c.v0 - c.v1) * (6.0 * t * t - 6.0 * t) / c.h +
         c.d0 * (3.0 * t * t - 4.0 * t + 1.0) + c.d1 * (3.0 * t * t - 2.0 * t);
}

double PhiProfile::drift_at(double x) const {
  if (x < grid.front()) return asym_drift(left_asym, x, false);
  if (x > grid.back()) return asym_drift(right_asym, x, true);
  return deriv_at(x) / value_at(x);
}

PhiProfile make_profile_from_functions(
    const std::vector<double>& grid_in, const std::function<double(double)>& value,
    const std::function<double(double)>& deriv_left,
    const std::function<double(double)>& deriv_right,
    const std::vector<double>& kink_locations, RegimeTag regime) {
  std::set<double> nodes(grid_in.begin(), grid_in.end());
  for (double k : kink_locations) nodes.insert(k);
  PhiProfile p;
  p.grid.assign(nodes.begin(), nodes.end());
  p.regime = regime;
  p.values.reserve(p.grid.size());
  p.derivs.reserve(p.grid.size());
  for (std::size_t i = 0; i < p.grid.size(); ++i) {
    double x = p.grid[i];
    p.values.push_back(value(x));
    bool kink = false;
    for (double k : kink_locations)
      if (x == k) {
        kink = true;
        p.kinks.push_back({i, deriv_left(x), deriv_right(x)});
        break;
      }
    p.derivs.push_back(kink ? 0.5 * (deriv_left(x) + deriv_right(x)) : deriv_right(x));
  }
  p.left_asym = {EdgeKind::Affine, p.grid.front(), p.values.front(), p.derivs.front(),
                 0, 0, 0};
  p.right_asym = {EdgeKind::Affine, p.grid.back(), p.values.back(), p.derivs.back(),
                  0, 0, 0};
  return p;
}

// ---------------------------------------------------------------------------
// RK4 integrator for phi''(dx) = W(x) phi(x) dx + atom jumps.
// ---------------------------------------------------------------------------

namespace {

struct OdeState {
  double phi = 1.0;
  double dphi = 0.0;
};

struct Sample {
  double x;
  double phi;
  double d_left;
  double d_right;
  bool kink;
  double f_log2;  // renormalization applied before this sample was taken
};

class SturmIntegrator {
 public:
  SturmIntegrator(std::function<double(double)> w, const std::vector<Atom>& atoms,
                  std::vector<double> breakpoints, double step)
      : w_(std::move(w)), atoms_(atoms), breakpoints_(std::move(breakpoints)),
        step_(step) {}

  // Integrates from x_from to x_to (either direction). Atom jumps are applied
  // strictly inside the interval. States are recorded at every node of
  // record_at (which must lie inside [min,max] and be sorted in integration
  // direction). Large values are renormalized; samples carry the log2 factor.
  void run(double x_from, double x_to, OdeState& s, std::vector<double> record_at,
           std::vector<Sample>* out) {
    const double dir = (x_to >= x_from) ? 1.0 : -1.0;
    f_log2_ = 0.0;

    std::vector<double> events;
    auto inside = [&](double v) {
      return (v - x_from) * dir > 1e-14 && (x_to - v) * dir > 1e-14;
    };
    for (const Atom& a : atoms_)
      if (inside(a.location)) events.push_back(a.location);
    for (double b : breakpoints_)
      if (inside(b)) events.push_back(b);
    for (double r : record_at)
      if (inside(r)) events.push_back(r);
    events.push_back(x_to);
    std::sort(events.begin(), events.end());
    if (dir < 0) std::reverse(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-14; }),
                 events.end());

    // record_at and the event sweep share the integration order, so a moving
    // index pairs them up in one pass
    std::size_t rec_idx = 0;
    auto should_record = [&](double x) {
      if (rec_idx < record_at.size() && std::abs(record_at[rec_idx] - x) < 1e-13) {
        ++rec_idx;
        return true;
      }
      return false;
    };

    double x = x_from;
    if (should_record(x_from)) record(x_from, s, false, out);
    for (double ev : events) {
      advance(x, ev, s);
      x = ev;
      double atom_mass = 0.0;
      bool at_atom = false;
      for (const Atom& a : atoms_)
        if (std::abs(a.location - x) < 1e-14 && inside(a.location)) {
          atom_mass = a.mass;
          at_atom = true;
        }
      if (at_atom) {
        double d_before = s.dphi;
        s.dphi += dir * atom_mass * s.phi;
        if (should_record(x)) {
          // left/right derivatives in spatial order
          double dl = dir > 0 ? d_before : s.dphi;
          double dr = dir > 0 ? s.dphi : d_before;
          if (out) out->push_back({x, s.phi, dl, dr, true, f_log2_});
        }
      } else if (should_record(x)) {
        record(x, s, false, out);
      }
      renormalize(s);
    }
  }

  double f_log2() const { return f_log2_; }

 private:
  void record(double x, const OdeState& s, bool kink, std::vector<Sample>* out) {
    if (out) out->push_back({x, s.phi, s.dphi, s.dphi, kink, f_log2_});
  }

  void renormalize(OdeState& s) {
    double m = std::max(std::abs(s.phi), std::abs(s.dphi));
    if (m > 1e250) {
      s.phi = std::ldexp(s.phi, -900);
      s.dphi = std::ldexp(s.dphi, -900);
      f_log2_ -= 900.0;
    }
  }

  void advance(double x0, double x1, OdeState& s) {
    double len = x1 - x0;
    if (len == 0.0) return;
    std::size_t nsub =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::abs(len) / step_)));
    double h = len / static_cast<double>(nsub);
    double x = x0;
    seg_lo_ = std::min(x0, x1);
    seg_hi_ = std::max(x0, x1);
    // sample W strictly inside the segment: at a jump node the density value
    // belongs to one side only, and each segment must see its own limit
    double nudge = 1e-9 * (seg_hi_ - seg_lo_);
    seg_lo_ += nudge;
    seg_hi_ -= nudge;
    for (std::size_t k = 0; k < nsub; ++k) {
      rk4_step(x, h, s);
      x = x0 + static_cast<double>(k + 1) * h;
    }
  }

  void rk4_step(double x, double h, OdeState& s) {
    // clamp keeps roundoff drift from sampling W across a segment-boundary jump
    auto f = [&](double xx, const OdeState& u) {
      return OdeState{u.dphi, w_(std::clamp(xx, seg_lo_, seg_hi_)) * u.phi};
    };
    OdeState k1 = f(x, s);
    OdeState k2 = f(x + 0.5 * h, {s.phi + 0.5 * h * k1.phi, s.dphi + 0.5 * h * k1.dphi});
    OdeState k3 = f(x + 0.5 * h, {s.phi + 0.5 * h * k2.phi, s.dphi + 0.5 * h * k2.dphi});
    OdeState k4 = f(x + h, {s.phi + h * k3.phi, s.dphi + h * k3.dphi});
    s.phi += h / 6.0 * (k1.phi + 2 * k2.phi + 2 * k3.phi + k4.phi);
    s.dphi += h / 6.0 * (k1.dphi + 2 * k2.dphi + 2 * k3.dphi + k4.dphi);
  }

  std::function<double(double)> w_;
  std::vector<Atom> atoms_;
  std::vector<double> breakpoints_;
  double step_;
  double f_log2_ = 0.0;
  double seg_lo_ = 0.0, seg_hi_ = 0.0;
};

std::pair<double, double> support_hull(const RadonPotential& v) {
  if (v.support_bounds) return *v.support_bounds;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  if (!v.grid.empty()) {
    lo = v.grid.front();
    hi = v.grid.back();
  }
  for (const Atom& a : v.atoms) {
    lo = std::min(lo, a.location);
    hi = std::max(hi, a.location);
  }
  if (!std::isfinite(lo)) throw InvalidArgument("potential has empty support");
  return {lo, hi};
}

std::vector<double> merged_output_grid(std::pair<double, double> domain, std::size_t n,
                                       const RadonPotential& v,
                                       std::vector<double> extra) {
  if (n < 2) throw InvalidArgument("need at least 2 output nodes");
  std::set<double> nodes;
  for (std::size_t i = 0; i < n; ++i)
    nodes.insert(domain.first +
                 (domain.second - domain.first) * static_cast<double>(i) /
                     static_cast<double>(n - 1));
  for (const Atom& a : v.atoms)
    if (a.location >= domain.first && a.location <= domain.second)
      nodes.insert(a.location);
  for (double b : v.breakpoints)
    if (b >= domain.first && b <= domain.second) nodes.insert(b);
  for (double e : extra)
    if (e >= domain.first && e <= domain.second) nodes.insert(e);
  return {nodes.begin(), nodes.end()};
}

void fill_profile_from_samples(PhiProfile& p, const std::vector<Sample>& samples) {
  // samples may be in either spatial order
  std::vector<Sample> s(samples);
  std::sort(s.begin(), s.end(), [](const Sample& a, const Sample& b) { return a.x < b.x; });
  p.grid.clear();
  p.values.clear();
  p.derivs.clear();
  p.kinks.clear();
  for (const Sample& smp : s) {
    p.grid.push_back(smp.x);
    p.values.push_back(smp.phi);
    if (smp.kink) {
      p.kinks.push_back({p.grid.size() - 1, smp.d_left, smp.d_right});
      p.derivs.push_back(0.5 * (smp.d_left + smp.d_right));
    } else {
      p.derivs.push_back(smp.d_right);
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Integrable regime: phi affine outside supp(V) with slopes -+ sqrt(2/pi);
// inward shooting from both affine ends, matched at the support midpoint.
// The ODE is linear, so the two boundary values (p, q) solve a 2x2 system
// assembled from basis integrations; an explicit mismatch check guards the
// conditioning.
// ---------------------------------------------------------------------------

PhiProfile solve_integrable_bvp(const RadonPotential& v,
                                std::pair<double, double> domain, std::size_t n,
                                const SturmOptions& opt) {
  RegimeTag tag = classify_regime(v);
  if (tag.regime != Regime::Integrable)
    throw InvalidArgument("solve_integrable_bvp: potential is not in the integrable regime");

  auto [sa, sb] = support_hull(v);
  if (domain.first > sa - opt.margin || domain.second < sb + opt.margin)
    throw InvalidArgument("solve_integrable_bvp: domain must extend beyond supp(V)");

  const double c = kSqrt2OverPi;
  auto w = [&v](double x) { return v.density_at(x); };

  // Atoms located exactly at the hull edges are applied by hand below.
  double mass_at_sa = 0.0, mass_at_sb = 0.0;
  for (const Atom& a : v.atoms) {
    if (a.location == sa) mass_at_sa = a.mass;
    if (a.location == sb) mass_at_sb = a.mass;
  }

  const bool degenerate = (sb - sa) < 1e-12;
  // The anchor must avoid atom locations, where the matching state would be
  // ambiguous between the two one-sided derivatives.
  double anchor = 0.5 * (sa + sb);
  if (!degenerate) {
    auto near_atom = [&](double x) {
      for (const Atom& a : v.atoms)
        if (std::abs(a.location - x) < 1e-9 * (1.0 + sb - sa)) return true;
      return false;
    };
    double frac = 0.5;
    while (near_atom(anchor) && frac > 1e-3) {
      frac *= 0.61803398875;
      anchor = sa + frac * (sb - sa);
    }
    if (near_atom(anchor)) throw NonConvergedShooting("could not place anchor");
  }

  double uLf, uLd, wLf, wLd, uRf, uRd, wRf, wRd;
  SturmIntegrator integ(w, v.atoms, v.breakpoints, opt.step);
  if (!degenerate) {
    // Left basis: state at sa- is (p, -c); the edge atom jump applies first.
    OdeState u{1.0, mass_at_sa * 1.0};
    integ.run(sa, anchor, u, {}, nullptr);
    uLf = u.phi; uLd = u.dphi;
    OdeState wl{0.0, 1.0};
    integ.run(sa, anchor, wl, {}, nullptr);
    wLf = wl.phi; wLd = wl.dphi;
    // Right basis: state at sb+ is (q, +c); crossing sb leftward removes the jump.
    OdeState ur{1.0, -mass_at_sb * 1.0};
    integ.run(sb, anchor, ur, {}, nullptr);
    uRf = ur.phi; uRd = ur.dphi;
    OdeState wr{0.0, 1.0};
    integ.run(sb, anchor, wr, {}, nullptr);
    wRf = wr.phi; wRd = wr.dphi;
  } else {
    double m = mass_at_sa + mass_at_sb;  // single shared location
    // phi_L(sa) = p with slope -c; phi_R = q with slope c - m q on the left side.
    uLf = 1.0; uLd = 0.0;
    wLf = 0.0; wLd = 1.0;
    uRf = 1.0; uRd = -m;
    wRf = 0.0; wRd = 1.0;
  }

  // p*uL - c*wL == q*uR + c*wR  (value and derivative at the anchor)
  double a11 = uLf, a12 = -uRf, b1 = c * (wLf + wRf);
  double a21 = uLd, a22 = -uRd, b2 = c * (wLd + wRd);
  double det = a11 * a22 - a12 * a21;
  double scale = std::max({std::abs(a11), std::abs(a12), std::abs(a21), std::abs(a22)});
  if (std::abs(det) < 1e-14 * scale * scale)
    throw NonConvergedShooting("anchor matching system is singular");
  double p = (b1 * a22 - a12 * b2) / det;
  double q = (a11 * b2 - b1 * a21) / det;
  if (!(p > 0.0) || !(q > 0.0))
    throw NonConvergedShooting("matched boundary values are not positive");

  // Residual check of the matching.
  {
    double lf = p * uLf - c * wLf, rf = q * uRf + c * wRf;
    double ld = p * uLd - c * wLd, rd = q * uRd + c * wRd;
    double tol = opt.match_tol * std::max(1.0, std::abs(lf));
    if (std::abs(lf - rf) > tol || std::abs(ld - rd) > tol)
      throw NonConvergedShooting("affine continuations could not be matched");
  }

  // Final pass: integrate across the support recording the merged output grid.
  std::vector<double> out_grid = merged_output_grid(domain, n, v, {sa, sb, anchor});
  std::vector<Sample> samples;
  for (double x : out_grid) {
    if (x < sa) samples.push_back({x, p + c * (sa - x), -c, -c, false, 0.0});
    if (x > sb) samples.push_back({x, q + c * (x - sb), c, c, false, 0.0});
  }
  // Interior: run from sa to sb with the solved initial state.
  {
    std::vector<double> rec;
    for (double x : out_grid)
      if (x >= sa && x <= sb) rec.push_back(x);
    if (degenerate) {
      double m = mass_at_sa + mass_at_sb;
      samples.push_back({sa, p, -c, m > 0 ? -c + m * p : c, m > 0, 0.0});
    } else {
      OdeState s{p, -c + mass_at_sa * p};
      std::vector<Sample> interior;
      SturmIntegrator final_integ(w, v.atoms, v.breakpoints, opt.step);
      // record sa and sb by hand to carry the one-sided derivatives
      std::vector<double> rec_inner;
      for (double x : rec)
        if (x != sa && x != sb) rec_inner.push_back(x);
      samples.push_back({sa, p, -c, -c + mass_at_sa * p, mass_at_sa > 0, 0.0});
      final_integ.run(sa, sb, s, rec_inner, &interior);
      for (const Sample& smp : interior) samples.push_back(smp);
      samples.push_back({sb, s.phi, s.dphi, s.dphi + mass_at_sb * s.phi,
                         mass_at_sb > 0, 0.0});
    }
  }

  PhiProfile prof;
  fill_profile_from_samples(prof, samples);
  prof.regime = tag;
  prof.left_asym = {EdgeKind::Affine, prof.grid.front(), prof.values.front(), -c, 0, 0, 0};
  prof.right_asym = {EdgeKind::Affine, prof.grid.back(), prof.values.back(), c, 0, 0, 0};
  for (double val : prof.values)
    if (!(val > 0.0)) throw NonConvergedShooting("profile lost positivity");
  return prof;
}

// ---------------------------------------------------------------------------
// Unilateral regime: decaying boundary on the right (WKB-exact start beyond
// the envelope), affine with slope -sqrt(2/pi) on the left. The decaying
// branch is integrated leftward in one pass; the growing-mode contamination
// of the WKB start decays by the full envelope factor, and the overall scale
// is fixed afterwards by the far-left slope.
// ---------------------------------------------------------------------------

PhiProfile solve_unilateral_bvp(const RadonPotential& v,
                                std::pair<double, double> domain, std::size_t n,
                                const SturmOptions& opt) {
  RegimeTag tag = classify_regime(v);
  if (tag.regime != Regime::Unilateral)
    throw InvalidArgument("solve_unilateral_bvp: potential is not in the unilateral regime");

  auto hull = support_hull(v);
  const double sa = hull.first;
  if (domain.first > sa - opt.margin)
    throw InvalidArgument("solve_unilateral_bvp: domain must extend left of supp(V)");

  auto w = [&v](double x) { return v.density_at(x); };

  // Place the decaying start where the WKB envelope has absorbed
  // envelope_log e-folds.
  double acc = 0.0;
  double x_r = std::max(sa, std::min(0.0, domain.second));
  const double h_scan = 10.0 * opt.step;
  const double x_cap = std::max(domain.second, v.grid.empty() ? 0.0 : v.grid.back()) + 1e4;
  while (acc < opt.envelope_log && x_r < x_cap) {
    acc += std::sqrt(std::max(0.0, w(x_r))) * h_scan;
    x_r += h_scan;
  }
  if (acc < opt.envelope_log)
    throw DomainTooNarrow(
        "unilateral potential too small on the sampled right tail to truncate");
  double x_start = std::max(x_r, domain.second);
  double x_left = std::min(domain.first, sa - opt.margin);

  std::vector<double> out_grid = merged_output_grid(domain, n, v, {sa, x_start});

  OdeState s{1.0, -std::sqrt(std::max(0.0, w(x_start)))};
  std::vector<double> rec(out_grid.rbegin(), out_grid.rend());
  std::vector<Sample> samples;
  SturmIntegrator integ(w, v.atoms, v.breakpoints, opt.step);
  integ.run(x_start, x_left, s, rec, &samples);
  if (std::abs(x_left - out_grid.front()) > 1e-13)
    samples.push_back({x_left, s.phi, s.dphi, s.dphi, false, integ.f_log2()});

  // Far-left slope fixes the scale; it must point downward toward the right.
  double d_t = s.dphi;
  double f_end = integ.f_log2();
  if (!(d_t < 0.0))
    throw NonConvergedShooting("left slope has the wrong sign; no decaying match");

  const double c = kSqrt2OverPi;
  for (Sample& smp : samples) {
    double factor = c / (-d_t) * std::exp2(smp.f_log2 - f_end) *
                    std::exp2(0.0);
    // phi(x) = s_global * T(x)/F(x) with s_global = c*F(end)/(-T'(end))
    smp.phi *= factor;
    smp.d_left *= factor;
    smp.d_right *= factor;
    if (smp.phi <= 0.0) smp.phi = std::numeric_limits<double>::min();
  }

  PhiProfile prof;
  fill_profile_from_samples(prof, samples);
  prof.regime = tag;
  prof.left_asym = {EdgeKind::Affine, prof.grid.front(), prof.values.front(), -c, 0, 0, 0};

  // Fit the decay envelope phi <= C exp(-C' x^{1-alpha}) on the right half of
  // the positive axis.
  {
    double alpha = tag.alpha;
    double p = 1.0 - alpha;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < prof.grid.size(); ++i) {
      double x = prof.grid[i];
      if (x > std::max(0.5 * x_start, sa + 0.1) && prof.values[i] > 1e-280) {
        xs.push_back(std::pow(x, p));
        ys.push_back(std::log(prof.values[i]));
      }
    }
    double cprime = 1.0, logc = 0.0;
    if (xs.size() >= 2) {
      auto beta = least_squares({std::vector<double>(xs.size(), 1.0), xs}, ys);
      logc = beta[0];
      cprime = std::max(1e-8, -beta[1]);
    }
    // Raise C until the bound holds on the whole positive grid.
    double cbound = std::exp(logc);
    for (std::size_t i = 0; i < prof.grid.size(); ++i) {
      double x = prof.grid[i];
      if (x <= 0.0) continue;
      double envelope = std::exp(-cprime * std::pow(x, p));
      if (envelope > 0.0) cbound = std::max(cbound, prof.values[i] / envelope);
    }
    cbound *= 1.0 + 1e-9;
    prof.right_asym = {EdgeKind::StretchedExp, prof.grid.back(), prof.values.back(),
                       0, cprime, alpha, cbound};
  }

  for (double val : prof.values)
    if (!(val > 0.0)) throw NonConvergedShooting("profile lost positivity");
  return prof;
}

// ---------------------------------------------------------------------------
// Bilateral regime: Neumann branch F on [0, r], decaying branch G on [r, inf)
// with r = V^{-1}(gamma); gamma0 is the unique gamma where the normalized
// derivatives glue. Beyond the sampled grid V is held at its declared limit,
// which makes the decaying start exact there.
// ---------------------------------------------------------------------------

namespace {

struct BilateralSetup {
  double v_lo, v_hi;       // inf and sup of V
  double grid_back;
  std::function<double(double)> veff;  // even, declared limit beyond the grid
};

BilateralSetup bilateral_setup(const RadonPotential& v) {
  BilateralSetup s;
  s.v_lo = v.density_at(0.0);
  s.v_hi = v.tails.right_limit_value;
  s.grid_back = v.grid.empty() ? 1.0 : v.grid.back();
  double gb = s.grid_back, vh = s.v_hi;
  s.veff = [&v, gb, vh](double x) {
    double ax = std::abs(x);
    return ax > gb ? vh : v.density_at(ax);
  };
  return s;
}

double right_inverse(const BilateralSetup& s, double gamma) {
  // inf{t >= 0 : V(t) > gamma} for right-continuous nondecreasing V
  if (s.veff(0.0) > gamma) return 0.0;
  double lo = 0.0, hi = s.grid_back;
  if (s.veff(hi) <= gamma) return hi;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (s.veff(mid) > gamma) hi = mid;
    else lo = mid;
    if (hi - lo < 1e-14 * (1.0 + hi)) break;
  }
  return hi;
}

// Returns (mismatch, r). mismatch = F'/F - G'/G at r; decreasing in gamma.
double bilateral_mismatch(const RadonPotential& v, const BilateralSetup& s,
                          double gamma, const SturmOptions& opt, double* r_out) {
  double r = right_inverse(s, gamma);
  if (r_out) *r_out = r;
  auto w = [&s, gamma](double x) { return s.veff(x) - gamma; };

  // Neumann branch on [0, r]
  double mF;
  if (r < 1e-12) {
    mF = 0.0;
  } else {
    OdeState f{1.0, 0.0};
    SturmIntegrator integ(w, {}, v.breakpoints, opt.step);
    integ.run(0.0, r, f, {}, nullptr);
    if (!(f.phi > 0.0)) return -1e300;  // gamma far too large
    mF = f.dphi / f.phi;
  }

  // Decaying branch: start on the flat declared-limit region, where the
  // decaying solution is exactly exponential.
  double cbar = s.v_hi - gamma;
  if (cbar <= 0.0) return -1e300;
  double x_flat = std::max(r, s.grid_back);
  double mG;
  OdeState g{1.0, -std::sqrt(std::max(1e-300, s.veff(x_flat) - gamma))};
  if (x_flat - r > 1e-13) {
    SturmIntegrator integ(w, {}, v.breakpoints, opt.step);
    integ.run(x_flat, r, g, {}, nullptr);
    if (!(g.phi > 0.0)) return 1e300;
  }
  mG = g.dphi / g.phi;
  return mF - mG;
}

}  // namespace

double bilateral_gamma0_root(double a) {
  if (!(a > 0.0)) throw InvalidArgument("bilateral_gamma0_root: a must be positive");
  double hi = std::min(1.0, (kPi / (2.0 * a)) * (kPi / (2.0 * a)));
  auto f = [a](double g) {
    return std::tan(a * std::sqrt(g)) - std::sqrt((1.0 - g) / g);
  };
  double lo = 1e-14, up = hi - 1e-14;
  if (f(lo) > 0.0 || f(up) < 0.0)
    throw NoSignChange("tan-equation bracket failed");
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + up);
    if (f(mid) < 0.0) lo = mid;
    else up = mid;
  }
  return 0.5 * (lo + up);
}

EigenResult solve_bilateral_eigen(const RadonPotential& v,
                                  std::pair<double, double> bracket, double tol,
                                  const SturmOptions& opt) {
  RegimeTag tag = classify_regime(v);
  if (tag.regime != Regime::Bilateral)
    throw InvalidArgument("solve_bilateral_eigen: potential is not bilateral");
  BilateralSetup setup = bilateral_setup(v);
  double range = setup.v_hi - setup.v_lo;
  if (!(range > 0.0))
    throw NoSignChange("V is constant; no spectral shift to solve for");

  double eps = 1e-6 * range;
  double lo = std::max(bracket.first, setup.v_lo + eps);
  double hi = std::min(bracket.second, setup.v_hi - eps);
  if (!(lo < hi)) throw InvalidArgument("empty bilateral bracket");

  EigenResult res;
  double m_lo = bilateral_mismatch(v, setup, lo, opt, nullptr);
  double m_hi = bilateral_mismatch(v, setup, hi, opt, nullptr);
  res.mismatch_trace.push_back({lo, m_lo});
  res.mismatch_trace.push_back({hi, m_hi});
  if (!(m_lo > 0.0 && m_hi < 0.0))
    throw NoSignChange("derivative mismatch does not bracket zero");

  double gamma = 0.5 * (lo + hi), m_mid = 0.0;
  for (int it = 0; it < 300; ++it) {
    gamma = 0.5 * (lo + hi);
    m_mid = bilateral_mismatch(v, setup, gamma, opt, nullptr);
    res.mismatch_trace.push_back({gamma, m_mid});
    if (std::abs(m_mid) < tol || (hi - lo) < 1e-16 * (1.0 + std::abs(gamma))) break;
    if (m_mid > 0.0) lo = gamma;
    else hi = gamma;
  }
  if (std::abs(m_mid) > std::max(tol, 1e3 * tol) && (hi - lo) > 1e-12)
    throw NonConvergedShooting("bilateral bisection stalled");
  res.gamma0 = gamma;

  // Assemble the glued, evenly extended profile.
  double r = right_inverse(setup, gamma);
  double cbar = setup.v_hi - gamma;
  double x_out = std::max(r, setup.grid_back) + 28.0 / std::sqrt(cbar);
  auto w = [&setup, gamma](double x) { return setup.veff(x) - gamma; };

  const std::size_t half_n = 2000;
  std::set<double> nodes;
  for (std::size_t i = 0; i <= half_n; ++i)
    nodes.insert(x_out * static_cast<double>(i) / static_cast<double>(half_n));
  nodes.insert(r);
  nodes.insert(std::min(setup.grid_back, x_out));
  std::vector<double> pos(nodes.begin(), nodes.end());

  std::vector<double> val_pos(pos.size()), der_pos(pos.size());
  // F on [0, r], scaled so F(r) = 1
  {
    std::vector<Sample> fs;
    std::vector<double> rec;
    for (double x : pos)
      if (x <= r) rec.push_back(x);
    OdeState st{1.0, 0.0};
    SturmIntegrator integ(w, {}, v.breakpoints, opt.step);
    std::vector<Sample> got;
    integ.run(0.0, std::max(r, 1e-300), st, rec, &got);
    double fr = st.phi;
    for (const Sample& smp : got) {
      auto it = std::lower_bound(pos.begin(), pos.end(), smp.x - 1e-13);
      std::size_t idx = static_cast<std::size_t>(it - pos.begin());
      val_pos[idx] = smp.phi / fr;
      der_pos[idx] = smp.d_right / fr;
    }
    if (r < 1e-12 && !pos.empty()) {
      val_pos[0] = 1.0;
      der_pos[0] = 0.0;
    }
  }
  // G on [r, x_out], scaled so G(r) = 1; integrate leftward from the flat zone
  {
    double x_flat = std::max(r, setup.grid_back);
    std::vector<double> rec;
    for (double x : pos)
      if (x > r + 1e-13) rec.push_back(x);
    std::sort(rec.begin(), rec.end(), std::greater<double>());
    OdeState st{1.0, -std::sqrt(std::max(1e-300, setup.veff(x_flat) - gamma))};
    std::vector<Sample> got;
    // analytic fill beyond x_flat, RK4 below
    for (double x : rec)
      if (x >= x_flat - 1e-13) {
        double e = std::exp(-std::sqrt(cbar) * (x - x_flat));
        got.push_back({x, e, -std::sqrt(cbar) * e, -std::sqrt(cbar) * e, false, 0.0});
      }
    std::vector<double> rec_below;
    for (double x : rec)
      if (x < x_flat - 1e-13) rec_below.push_back(x);
    SturmIntegrator integ(w, {}, v.breakpoints, opt.step);
    integ.run(x_flat, r, st, rec_below, &got);
    double gr = st.phi;
    for (const Sample& smp : got) {
      auto it = std::lower_bound(pos.begin(), pos.end(), smp.x - 1e-13);
      std::size_t idx = static_cast<std::size_t>(it - pos.begin());
      if (idx < pos.size() && pos[idx] > r + 1e-14) {
        val_pos[idx] = smp.phi / gr;
        der_pos[idx] = smp.d_right / gr;
      }
    }
  }

  PhiProfile prof;
  prof.regime = tag;
  prof.regime.gamma0 = gamma;
  prof.gamma_shift = gamma;
  for (std::size_t i = pos.size(); i-- > 1;) {
    prof.grid.push_back(-pos[i]);
    prof.values.push_back(val_pos[i]);
    prof.derivs.push_back(-der_pos[i]);
  }
  for (std::size_t i = 0; i < pos.size(); ++i) {
    prof.grid.push_back(pos[i]);
    prof.values.push_back(val_pos[i]);
    prof.derivs.push_back(der_pos[i]);
  }
  double rate = std::sqrt(cbar);
  prof.left_asym = {EdgeKind::ExpDecay, prof.grid.front(), prof.values.front(), 0,
                    rate, 0, 0};
  prof.right_asym = {EdgeKind::ExpDecay, prof.grid.back(), prof.values.back(), 0,
                     rate, 0, 0};
  for (double val : prof.values)
    if (!(val > 0.0)) throw NonConvergedShooting("bilateral profile lost positivity");
  res.phi = std::move(prof);
  return res;
}

// ---------------------------------------------------------------------------

double integral_phi_dV(const PhiProfile& phi, const RadonPotential& v) {
  double total = 0.0;
  for (const Atom& a : v.atoms) total += a.mass * phi.value_at(a.location);
  if (v.has_density()) {
    auto [sa, sb] = support_hull(v);
    std::set<double> cuts{sa, sb};
    for (double b : v.breakpoints)
      if (b > sa && b < sb) cuts.insert(b);
    for (double g : phi.grid)
      if (g > sa && g < sb) cuts.insert(g);
    std::vector<double> cv(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i + 1 < cv.size(); ++i) {
      double a = cv[i], b = cv[i + 1];
      std::size_t pieces =
          std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((b - a) / 0.05)));
      for (std::size_t k = 0; k < pieces; ++k) {
        double aa = a + (b - a) * static_cast<double>(k) / static_cast<double>(pieces);
        double bb = a + (b - a) * static_cast<double>(k + 1) / static_cast<double>(pieces);
        total += integrate_gl(
            [&](double x) { return phi.value_at(x) * v.density_at(x); }, aa, bb, 8);
      }
    }
  }
  return total;
}

std::string profile_to_csv(const PhiProfile& phi) {
  CsvWriter csv({"x", "phi", "dphi"});
  for (std::size_t i = 0; i < phi.grid.size(); ++i)
    csv.add_row({phi.grid[i], phi.values[i], phi.derivs[i]});
  return csv.content();
}

// ---------------------------------------------------------------------------
// Closed-form catalogue
// ---------------------------------------------------------------------------

namespace {

double get_param(const FormulaParams& p, const std::string& key, double def,
                 bool required = false) {
  auto it = p.find(key);
  if (it == p.end()) {
    if (required) throw InvalidArgument("missing formula parameter " + key);
    return def;
  }
  return it->second;
}

}  // namespace

double closed_form_oracle(const std::string& id, const FormulaParams& p, double x) {
  const double c = kSqrt2OverPi;
  if (id == "ex3.2") {
    return std::exp(-0.5 * x * x);
  }
  if (id == "ex3.4") {
    double a = get_param(p, "a", 0.0);
    if (a < 0.0) throw InvalidArgument("ex3.4 needs a >= 0");
    return std::abs(x) > a ? std::exp(-std::abs(x)) : std::exp(-a) * (1.0 + a - std::abs(x));
  }
  if (id == "ex3.5") {
    double lam = get_param(p, "lambda", 1.0);
    if (lam <= 0.0) throw InvalidArgument("ex3.5 needs lambda > 0");
    return std::exp(-lam * std::abs(x));
  }
  if (id == "ex4.1") {
    double g = get_param(p, "gamma", 1.0);
    double a = get_param(p, "a", -1.0);
    double b = get_param(p, "b", 1.0);
    if (!(a < b) || g <= 0.0) throw InvalidArgument("ex4.1 needs a<b, gamma>0");
    double half = 0.5 * (b - a);
    if (x > b) return c * (1.0 / (g * std::tanh(g * half)) + x - b);
    if (x < a) return c * (1.0 / (g * std::tanh(g * half)) + a - x);
    return c * std::cosh(g * (x - 0.5 * (a + b))) / (g * std::sinh(g * half));
  }
  if (id == "ex4.2") {
    double g = get_param(p, "gamma", 1.0);
    double a = get_param(p, "a", -1.0);
    double b = get_param(p, "b", 1.0);
    if (!(a <= b) || g <= 0.0) throw InvalidArgument("ex4.2 needs a<=b, gamma>0");
    if (x > b) return c * (1.0 / (g * g) + x - b);
    if (x < a) return c * (1.0 / (g * g) + a - x);
    return c / (g * g);
  }
  if (id == "ex5.1") {
    double lam = get_param(p, "lambda", 1.0);
    if (lam <= 0.0) throw InvalidArgument("ex5.1 needs lambda > 0");
    return x >= 0.0 ? c / lam * std::exp(-lam * x) : c * (1.0 / lam - x);
  }
  if (id == "ex5.2") {
    return x >= 1.0 ? c * std::exp(0.5) * std::exp(-0.5 * x * x) : c * (2.0 - x);
  }
  if (id == "ex8.1") {
    double a = get_param(p, "a", 1.0);
    double g0 = bilateral_gamma0_root(a);
    if (std::abs(x) <= a) return std::cos(std::sqrt(g0) * x) / std::cos(std::sqrt(g0) * a);
    return std::exp(-std::sqrt(1.0 - g0) * (std::abs(x) - a));
  }
  throw UnknownFormula("no catalogue entry '" + id + "'");
}

const std::vector<CatalogueEntry>& formula_catalogue() {
  static const std::vector<CatalogueEntry> entries = {
      {"ex3.2", "phi = exp(-x^2/2); V_phi = x^2 - 1 (Ornstein-Uhlenbeck limit)", {}},
      {"ex3.4", "tent-capped exponential phi; V_phi = 1_{|x|>a} dx - 2/(1+a) delta_0", {"a"}},
      {"ex3.5", "phi = exp(-lambda|x|); V_phi = lambda^2 dx - 2 lambda delta_0 (bang-bang)",
       {"lambda"}},
      {"ex4.1", "phi_V for V = gamma^2 1_[a,b] dx", {"gamma", "a", "b"}},
      {"ex4.2", "phi_V for V = gamma^2 (delta_a + delta_b)", {"gamma", "a", "b"}},
      {"ex5.1", "phi_V for V = lambda^2 1_[0,inf) dx", {"lambda"}},
      {"ex5.2", "phi_V for V = (y^2-1) 1_{y>=1} dy", {}},
      {"ex8.1", "phi_{V-gamma0} for V = 1_{|x|>a}", {"a"}},
  };
  return entries;
}

}  // namespace penalab
