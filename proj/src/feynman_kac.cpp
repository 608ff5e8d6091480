#include "penalab/feynman_kac.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace penalab {

namespace {

// Potential view shared by the Radon and signed variants.
struct PotentialView {
  std::function<double(double)> density;
  const std::vector<Atom>* atoms;
  const std::vector<double>* breakpoints;
};

PotentialView view_of(const RadonPotential& v) {
  return {[&v](double x) { return v.density_at(x); }, &v.atoms, &v.breakpoints};
}
PotentialView view_of(const SignedPotential& v) {
  return {[&v](double x) { return v.density_at(x); }, &v.atoms, &v.breakpoints};
}

// Cell average of the density over [lo, hi], split at breakpoints so that
// step densities average exactly.
double cell_average(const PotentialView& v, double lo, double hi) {
  std::vector<double> cuts{lo, hi};
  for (double b : *v.breakpoints)
    if (b > lo && b < hi) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += integrate_gl(v.density, cuts[i], cuts[i + 1], 4);
  return total / (hi - lo);
}

// Prefactored constant-coefficient tridiagonal solver (Thomas).
class Tridiag {
 public:
  void factor(std::vector<double> lower, std::vector<double> diag,
              std::vector<double> upper) {
    lower_ = std::move(lower);
    diag_ = std::move(diag);
    upper_ = std::move(upper);
    const std::size_t n = diag_.size();
    cp_.assign(n, 0.0);
    inv_beta_.assign(n, 0.0);
    double beta = diag_[0];
    if (beta == 0.0) throw UnstableScheme("singular pivot in CN matrix");
    inv_beta_[0] = 1.0 / beta;
    for (std::size_t i = 1; i < n; ++i) {
      cp_[i] = upper_[i - 1] * inv_beta_[i - 1];
      beta = diag_[i] - lower_[i] * cp_[i];
      if (beta == 0.0) throw UnstableScheme("singular pivot in CN matrix");
      inv_beta_[i] = 1.0 / beta;
    }
  }
  void solve(std::vector<double>& rhs) const {
    const std::size_t n = rhs.size();
    rhs[0] *= inv_beta_[0];
    for (std::size_t i = 1; i < n; ++i)
      rhs[i] = (rhs[i] - lower_[i] * rhs[i - 1]) * inv_beta_[i];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= cp_[i + 1] * rhs[i + 1];
  }

 private:
  std::vector<double> lower_, diag_, upper_, cp_, inv_beta_;
};

// Crank-Nicolson on du/dt = L u with L given in flux form by
// (1/(2 m_i dx^2)) [ a_{i+1/2} (u_{i+1}-u_i) - a_{i-1/2} (u_i-u_{i-1}) ]
// - (c_i/2) u, zero flux at both outer faces.
struct CnStepper {
  std::vector<double> lo, di, up;   // the operator L (tridiagonal)
  Tridiag lhs;
  double dt;

  void build(const std::vector<double>& face_a, const std::vector<double>& m,
             const std::vector<double>& c, double dx, double dt_) {
    dt = dt_;
    const std::size_t n = m.size();
    lo.assign(n, 0.0);
    di.assign(n, 0.0);
    up.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double al = face_a[i];       // face i-1/2 (0 at the outer faces)
      double ar = face_a[i + 1];   // face i+1/2
      double w = 0.5 / (m[i] * dx * dx);
      if (i > 0) lo[i] = w * al;
      if (i + 1 < n) up[i] = w * ar;
      di[i] = -w * (al + ar) - 0.5 * c[i];
    }
    std::vector<double> L(n), D(n), U(n);
    for (std::size_t i = 0; i < n; ++i) {
      L[i] = -0.5 * dt * lo[i];
      D[i] = 1.0 - 0.5 * dt * di[i];
      U[i] = -0.5 * dt * up[i];
    }
    lhs.factor(std::move(L), std::move(D), std::move(U));
  }

  void step(std::vector<double>& u, std::vector<double>& scratch) const {
    const std::size_t n = u.size();
    scratch.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = (1.0 + 0.5 * dt * di[i]) * u[i];
      if (i > 0) s += 0.5 * dt * lo[i] * u[i - 1];
      if (i + 1 < n) s += 0.5 * dt * up[i] * u[i + 1];
      scratch[i] = s;
    }
    u.swap(scratch);
    lhs.solve(u);
  }
};

struct SnapshotSchedule {
  const PdeOptions& opt;
  double next_mid, next_late;
  SnapshotSchedule(const PdeOptions& o) : opt(o), next_mid(o.t_dense), next_late(20.0) {}
  bool want(double t) {
    if (t <= opt.t_dense + 1e-12) return true;
    if (t <= 20.0 + 1e-12) {
      if (t + 1e-9 >= next_mid) {
        while (next_mid <= t + 1e-9) next_mid += opt.snap_mid;
        return true;
      }
      return false;
    }
    if (t + 1e-9 >= next_late) {
      while (next_late <= t + 1e-9) next_late += opt.snap_late;
      return true;
    }
    return false;
  }
};

ZSurface run_flat_pde(const PotentialView& v, std::pair<double, double> x_domain,
                      const PdeOptions& opt) {
  if (opt.dx <= 0 || opt.dt <= 0 || opt.t_max <= 0)
    throw InvalidArgument("solve_pde_z: dx, dt, t_max must be positive");
  const double lo = x_domain.first, hi = x_domain.second;
  if (!(hi > lo)) throw InvalidArgument("solve_pde_z: empty domain");
  const std::size_t n = static_cast<std::size_t>(std::round((hi - lo) / opt.dx)) + 1;
  const double dx = (hi - lo) / static_cast<double>(n - 1);

  ZSurface zs;
  zs.dx = dx;
  zs.dt = opt.dt;
  zs.grid.resize(n);
  for (std::size_t i = 0; i < n; ++i) zs.grid[i] = lo + dx * static_cast<double>(i);

  // Potential on cells; atoms split linearly over the two adjacent nodes.
  std::vector<double> c(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double cl = zs.grid[i] - 0.5 * dx, cr = zs.grid[i] + 0.5 * dx;
    c[i] = cell_average(v, cl, cr);
  }
  for (const Atom& a : *v.atoms) {
    if (a.location < lo || a.location > hi)
      throw InvalidArgument("atom outside the PDE domain");
    double pos = (a.location - lo) / dx;
    std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(pos), n - 2);
    double w = pos - static_cast<double>(j);
    c[j] += a.mass * (1.0 - w) / dx;
    c[j + 1] += a.mass * w / dx;
  }

  std::vector<double> faces(n + 1, 1.0);
  faces.front() = faces.back() = 0.0;  // reflecting ends
  std::vector<double> mass(n, 1.0);
  mass.front() = mass.back() = 0.5;  // half cells at the ends

  CnStepper stepper;
  stepper.build(faces, mass, c, dx, opt.dt);

  std::vector<double> u(n, 1.0), scratch;
  SnapshotSchedule sched(opt);
  zs.times.push_back(0.0);
  zs.values.insert(zs.values.end(), u.begin(), u.end());

  // Edge classification for the boundary-influence check: where the potential
  // is flat near an edge, the edge node must follow its frozen-potential
  // evolution exp(-V_edge t/2); where it varies (confining wells), the edge
  // region must simply be dead by the end of the run.
  auto flat_edge = [&](bool left) {
    std::size_t off = std::max<std::size_t>(2, n / 20);
    double ce = left ? c.front() : c.back();
    double ci = left ? c[off] : c[n - 1 - off];
    return std::abs(ce - ci) <= 0.05 * (1.0 + std::abs(ce));
  };
  const bool flat_l = flat_edge(true), flat_r = flat_edge(false);

  const std::size_t n_steps =
      static_cast<std::size_t>(std::llround(opt.t_max / opt.dt));
  double edge_dev = 0.0;
  for (std::size_t k = 1; k <= n_steps; ++k) {
    stepper.step(u, scratch);
    double t = static_cast<double>(k) * opt.dt;
    if (!std::isfinite(u[n / 2])) throw UnstableScheme("non-finite PDE state");
    if (sched.want(t) || k == n_steps) {
      zs.times.push_back(t);
      zs.values.insert(zs.values.end(), u.begin(), u.end());
      if (flat_l)
        edge_dev = std::max(edge_dev, std::abs(u.front() - std::exp(-0.5 * c.front() * t)));
      if (flat_r)
        edge_dev = std::max(edge_dev, std::abs(u.back() - std::exp(-0.5 * c.back() * t)));
    }
  }
  if (!flat_l) edge_dev = std::max(edge_dev, 0.1 * std::abs(u.front()));
  if (!flat_r) edge_dev = std::max(edge_dev, 0.1 * std::abs(u.back()));
  zs.boundary_drift = edge_dev;
  if (opt.boundary_tol > 0 && edge_dev > opt.boundary_tol)
    throw DomainTooNarrow("boundary nodes moved by " + format_g17(edge_dev));
  return zs;
}

// Exponential-weighted panel integral: int_{t0}^{t1} e^{-lam t} Zlin(t) dt with
// Zlin the chord through (t0,z0), (t1,z1); exact for linear Z, so slowly
// varying integrands lose no accuracy on the sparse late snapshots.
double exp_panel(double lam, double t0, double t1, double z0, double z1) {
  double h = t1 - t0;
  double u = lam * h;
  double e0, e1;  // int_0^1 e^{-u s} ds and int_0^1 s e^{-u s} ds
  if (u < 1e-4) {
    e0 = 1.0 - 0.5 * u + u * u / 6.0;
    e1 = 0.5 - u / 3.0 + u * u / 8.0;
  } else {
    double em = std::exp(-u);
    e0 = (1.0 - em) / u;
    e1 = (1.0 - (1.0 + u) * em) / (u * u);
  }
  return std::exp(-lam * t0) * h * (z0 * e0 + (z1 - z0) * e1);
}

}  // namespace

std::size_t ZSurface::nearest_x(double x) const {
  auto it = std::lower_bound(grid.begin(), grid.end(), x);
  if (it == grid.end()) return grid.size() - 1;
  std::size_t i = static_cast<std::size_t>(it - grid.begin());
  if (i > 0 && std::abs(grid[i - 1] - x) < std::abs(grid[i] - x)) --i;
  return i;
}

std::vector<double> ZSurface::probe(double x) const {
  std::size_t xi = nearest_x(x);
  std::vector<double> out(times.size());
  for (std::size_t t = 0; t < times.size(); ++t) out[t] = at(t, xi);
  return out;
}

std::string ZSurface::to_csv() const {
  std::vector<std::string> header{"t"};
  for (double x : grid) header.push_back("x=" + format_g17(x));
  CsvWriter csv(header);
  for (std::size_t t = 0; t < times.size(); ++t) {
    std::vector<double> row{times[t]};
    for (std::size_t i = 0; i < grid.size(); ++i) row.push_back(at(t, i));
    csv.add_row(row);
  }
  return csv.content();
}

ZSurface solve_pde_z(const RadonPotential& v, std::pair<double, double> x_domain,
                     const PdeOptions& opt) {
  return run_flat_pde(view_of(v), x_domain, opt);
}

ZSurface solve_pde_z(const SignedPotential& v, std::pair<double, double> x_domain,
                     const PdeOptions& opt) {
  return run_flat_pde(view_of(v), x_domain, opt);
}

ZSurface solve_pde_radial(double mu, double lambda, double theta, double x_max,
                          const PdeOptions& opt) {
  if (mu < -0.5 || mu > 0.0)
    throw InvalidArgument("radial PDE: entrance handling covers mu in [-1/2, 0]");
  if (lambda < 0 || theta < 0 || x_max <= 0)
    throw InvalidArgument("radial PDE: bad parameters");
  const std::size_t n = static_cast<std::size_t>(std::round(x_max / opt.dx));
  const double dx = x_max / static_cast<double>(n);

  ZSurface zs;
  zs.dx = dx;
  zs.dt = opt.dt;
  zs.grid.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    zs.grid[i] = (static_cast<double>(i) + 0.5) * dx;  // regularized first node

  const double p = 2.0 * mu + 1.0;
  std::vector<double> faces(n + 1, 0.0), mass(n), c(n);
  for (std::size_t i = 1; i < n; ++i)
    faces[i] = std::pow(static_cast<double>(i) * dx, p);
  faces[0] = 0.0;  // zero flux at the origin (entrance/reflecting)
  faces[n] = 0.0;  // reflecting truncation
  for (std::size_t i = 0; i < n; ++i) {
    mass[i] = std::pow(zs.grid[i], p);
    double x = zs.grid[i];
    c[i] = lambda / (theta + x * x);
  }

  CnStepper stepper;
  stepper.build(faces, mass, c, dx, opt.dt);

  std::vector<double> u(n, 1.0), scratch;
  SnapshotSchedule sched(opt);
  zs.times.push_back(0.0);
  zs.values.insert(zs.values.end(), u.begin(), u.end());
  const std::size_t n_steps =
      static_cast<std::size_t>(std::llround(opt.t_max / opt.dt));
  double edge_dev = 0.0;
  for (std::size_t k = 1; k <= n_steps; ++k) {
    stepper.step(u, scratch);
    if (!std::isfinite(u[n / 2])) throw UnstableScheme("non-finite radial PDE state");
    double t = static_cast<double>(k) * opt.dt;
    if (sched.want(t) || k == n_steps) {
      zs.times.push_back(t);
      zs.values.insert(zs.values.end(), u.begin(), u.end());
      edge_dev = std::max(edge_dev, std::abs(u.back() - std::exp(-0.5 * c.back() * t)));
    }
  }
  zs.boundary_drift = edge_dev;
  if (opt.boundary_tol > 0 && edge_dev > opt.boundary_tol)
    throw DomainTooNarrow("radial boundary node moved by " + format_g17(edge_dev));
  return zs;
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

namespace {

McResult run_weighted_mc(const PotentialView& v, double x, double t,
                         const McOptions& opt,
                         const std::function<double(double)>& terminal) {
  if (opt.n_paths < 1) throw InvalidArgument("estimate_z_mc: need n_paths >= 1");
  if (opt.dt <= 0 || t < 0) throw InvalidArgument("estimate_z_mc: bad dt or t");
  if (t == 0.0) {
    double w = terminal ? terminal(x) : 1.0;
    return {w, 0.0, opt.n_paths};
  }
  const std::size_t n_steps =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(t / opt.dt)));
  const double dt = t / static_cast<double>(n_steps);
  const double sdt = std::sqrt(dt);
  const double eps = opt.band_c * sdt;

  const std::vector<Atom>& atoms = *v.atoms;
  const bool has_density = static_cast<bool>(v.density);

  return mc_mean(opt.n_paths, opt.seed, [&](std::size_t, RandomStream& rs) {
    double b = x;
    double expo = 0.0;  // (1/2) int L^y V(dy) accumulated along the path
    double v_prev = has_density ? v.density(b) : 0.0;
    for (std::size_t k = 0; k < n_steps; ++k) {
      double bn = b + sdt * rs.normal();
      if (has_density) {
        double v_next = v.density(bn);
        expo += 0.25 * (v_prev + v_next) * dt;  // (1/2) * trapezoid
        v_prev = v_next;
      }
      for (const Atom& a : atoms)
        if (std::abs(bn - a.location) < eps) expo += 0.5 * a.mass * dt / (2.0 * eps);
      b = bn;
    }
    double w = std::exp(-expo);
    return terminal ? w * terminal(b) : w;
  });
}

}  // namespace

McResult estimate_weighted_mc(const RadonPotential& v, double x, double t,
                              const McOptions& opt,
                              const std::function<double(double)>& terminal) {
  return run_weighted_mc(view_of(v), x, t, opt, terminal);
}

McResult estimate_weighted_mc(const SignedPotential& v, double x, double t,
                              const McOptions& opt,
                              const std::function<double(double)>& terminal) {
  return run_weighted_mc(view_of(v), x, t, opt, terminal);
}

// ---------------------------------------------------------------------------
// Laplace transform and Tauberian diagnostics
// ---------------------------------------------------------------------------

TauberianCheck laplace_tilde_A(const ZSurface& zs, const RadonPotential& v,
                               std::vector<double> lambdas, bool tail_extrapolation) {
  if (lambdas.empty()) throw InvalidArgument("laplace_tilde_A: no lambdas");
  std::sort(lambdas.begin(), lambdas.end(), std::greater<double>());
  const double t_end = zs.times.back();
  const double lam_min = lambdas.back();
  if (!tail_extrapolation && t_end < 10.0 / lam_min)
    throw TailNotCovered("surface covers t <= " + format_g17(t_end) +
                         " but 10/min(lambda) = " + format_g17(10.0 / lam_min));

  const std::size_t nx = zs.grid.size();
  const std::size_t nt = zs.times.size();
  const std::size_t nl = lambdas.size();

  // Tail law sqrt(t) Z -> c(x) with algebraic corrections: fit
  // sqrt(t) Z = c (1 + b1/t + b2/t^2) on the last three quarters of the
  // window (the correction scale grows like x^2, so the plain mean is badly
  // biased away from the support).
  std::vector<double> tail_c(nx, 0.0), tail_b1(nx, 0.0), tail_b2(nx, 0.0);
  if (tail_extrapolation) {
    double t_lo = std::max(0.25 * t_end, 1.0);
    std::vector<double> ones, inv_t, inv_t2, y;
    std::vector<std::size_t> rows;
    for (std::size_t k = 0; k < nt; ++k)
      if (zs.times[k] >= t_lo) rows.push_back(k);
    if (rows.size() < 8) throw TailNotCovered("too few snapshots for the tail fit");
    for (std::size_t k : rows) {
      ones.push_back(1.0);
      inv_t.push_back(1.0 / zs.times[k]);
      inv_t2.push_back(1.0 / (zs.times[k] * zs.times[k]));
    }
    for (std::size_t i = 0; i < nx; ++i) {
      y.clear();
      for (std::size_t k : rows) y.push_back(zs.at(k, i) * std::sqrt(zs.times[k]));
      auto beta = least_squares({ones, inv_t, inv_t2}, y);
      tail_c[i] = beta[0];
      tail_b1[i] = beta[1];
      tail_b2[i] = beta[2];
    }
  }

  TauberianCheck out;
  out.lambdas = lambdas;
  out.grid = zs.grid;
  out.a_tilde.assign(nl * nx, 0.0);
  out.a_tilde_prime.assign(nl * nx, 0.0);
  out.theta_sup.assign(nl, 0.0);
  out.tail_constant = tail_c[nx / 2];

  for (std::size_t li = 0; li < nl; ++li) {
    double lam = lambdas[li];
    // closed-form tails: J_k = int_T^inf e^{-lam t} t^{-1/2 - k} dt
    double ec = std::erfc(std::sqrt(lam * t_end));
    double em = std::exp(-lam * t_end);
    double j0 = std::sqrt(kPi / lam) * ec;
    double j1 = 2.0 * em / std::sqrt(t_end) - 2.0 * std::sqrt(kPi * lam) * ec;
    double j2 = (2.0 / 3.0) * em / std::pow(t_end, 1.5) - (2.0 * lam / 3.0) * j1;
    for (std::size_t i = 0; i < nx; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k + 1 < nt; ++k)
        acc += exp_panel(lam, zs.times[k], zs.times[k + 1], zs.at(k, i),
                         zs.at(k + 1, i));
      if (tail_extrapolation)
        acc += tail_c[i] * j0 + tail_b1[i] * j1 + tail_b2[i] * j2;
      out.a_tilde[li * nx + i] = std::sqrt(2.0 * lam) * acc;
    }
    for (std::size_t i = 1; i + 1 < nx; ++i)
      out.a_tilde_prime[li * nx + i] =
          (out.a_tilde[li * nx + i + 1] - out.a_tilde[li * nx + i - 1]) / (2.0 * zs.dx);
    out.a_tilde_prime[li * nx] = out.a_tilde_prime[li * nx + 1];
    out.a_tilde_prime[li * nx + nx - 1] = out.a_tilde_prime[li * nx + nx - 2];

    // theta = (A~)'' - A~ V as a density, away from atoms and edges. The sup
    // runs over the diffusively covered core |x| <= sqrt(t_end): beyond it the
    // surface never reached the 1/sqrt(t) regime and the extrapolated
    // transform is not a meaningful sample of A~.
    double sup = 0.0;
    double core = std::sqrt(t_end);
    for (std::size_t i = 2; i + 2 < nx; ++i) {
      if (tail_extrapolation && std::abs(zs.grid[i]) > core) continue;
      bool near_jump = false;
      for (const Atom& a : v.atoms)
        if (std::abs(zs.grid[i] - a.location) < 2.5 * zs.dx) near_jump = true;
      for (double bp : v.breakpoints)
        if (std::abs(zs.grid[i] - bp) < 2.5 * zs.dx) near_jump = true;
      if (near_jump) continue;
      double d2 = (out.a_tilde[li * nx + i + 1] - 2.0 * out.a_tilde[li * nx + i] +
                   out.a_tilde[li * nx + i - 1]) /
                  (zs.dx * zs.dx);
      double theta = d2 - out.a_tilde[li * nx + i] * v.density_at(zs.grid[i]);
      sup = std::max(sup, std::abs(theta));
    }
    out.theta_sup[li] = sup;
  }
  return out;
}

std::string TauberianCheck::to_csv() const {
  CsvWriter csv({"lambda", "x", "a_tilde", "a_tilde_prime", "theta_sup", "target"});
  for (std::size_t li = 0; li < lambdas.size(); ++li)
    for (std::size_t i = 0; i < grid.size(); ++i)
      csv.add_row({lambdas[li], grid[i], at(li, i), prime_at(li, i), theta_sup[li],
                   target.empty() ? 0.0 : target[i]});
  return csv.content();
}

// ---------------------------------------------------------------------------
// Decay fits
// ---------------------------------------------------------------------------

DecayEstimate fit_decay(const ZSurface& zs, double x, const RegimeTag& regime,
                        std::pair<double, double> window, const FitOptions& fopt) {
  std::size_t xi = zs.nearest_x(x);
  std::vector<double> ts, logz;
  for (std::size_t k = 0; k < zs.times.size(); ++k) {
    double t = zs.times[k];
    if (t < window.first || t > window.second) continue;
    double z = zs.at(k, xi);
    if (z <= 0.0) throw PoorFit("nonpositive Z in the fit window");
    ts.push_back(t);
    logz.push_back(std::log(z));
  }
  if (ts.size() < 4) throw InvalidArgument("fit_decay: window holds fewer than 4 samples");
  if (ts.back() < 10.0 * ts.front() - 1e-9 && regime.regime != Regime::SmallPhi &&
      regime.regime != Regime::Bilateral)
    throw InvalidArgument("fit_decay: window must span at least one decade in t");

  const std::size_t m = ts.size();
  DecayEstimate est;
  std::vector<double> ones(m, 1.0);
  std::vector<double> fitted(m, 0.0);

  switch (regime.regime) {
    case Regime::SmallPhi: {
      double s = 0.0;
      for (double lz : logz) s += lz;
      double b0 = s / static_cast<double>(m);
      est.k = 0.0;
      est.gamma = 0.0;
      est.constant = std::exp(b0);
      for (std::size_t i = 0; i < m; ++i) fitted[i] = b0;
      break;
    }
    case Regime::Bilateral: {
      std::vector<double> tt(m);
      for (std::size_t i = 0; i < m; ++i) tt[i] = -0.5 * ts[i];
      auto beta = least_squares({ones, tt}, logz);
      est.k = 0.0;
      est.gamma = beta[1];
      est.constant = std::exp(beta[0]);
      for (std::size_t i = 0; i < m; ++i) fitted[i] = beta[0] - 0.5 * beta[1] * ts[i];
      break;
    }
    case Regime::SlowDecay: {
      double b = (2.0 - regime.alpha) / (2.0 + regime.alpha);
      std::vector<double> tb(m);
      for (std::size_t i = 0; i < m; ++i) tb[i] = -0.5 * std::pow(ts[i], b);
      auto beta = least_squares({ones, tb}, logz);
      est.k = 0.0;
      est.gamma = 0.0;
      est.constant = beta[1];  // Theta_0
      for (std::size_t i = 0; i < m; ++i)
        fitted[i] = beta[0] - 0.5 * beta[1] * std::pow(ts[i], b);
      // free-exponent fit: scan the exponent and solve the linear part
      // (intercept + prefactor) by least squares; the intercept absorbs the
      // slowly varying correction that biases a log-log slope.
      auto rss_at = [&](double be) {
        std::vector<double> tbv(m);
        for (std::size_t i = 0; i < m; ++i) tbv[i] = std::pow(ts[i], be);
        auto bb = least_squares({ones, tbv}, logz);
        double rss = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          double r = logz[i] - bb[0] - bb[1] * tbv[i];
          rss += r * r;
        }
        return rss;
      };
      double lo = 0.05, hi = 0.95;
      const double gr = 0.61803398875;
      double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
      double f1 = rss_at(x1), f2 = rss_at(x2);
      for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - gr * (hi - lo);
          f1 = rss_at(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + gr * (hi - lo);
          f2 = rss_at(x2);
        }
      }
      est.slow_exponent_fitted = 0.5 * (lo + hi);
      break;
    }
    default: {  // Integrable, Unilateral, CriticalBessel: Z ~ c t^-k
      std::vector<double> lt(m);
      for (std::size_t i = 0; i < m; ++i) lt[i] = -std::log(ts[i]);
      auto beta = least_squares({ones, lt}, logz);
      est.k = beta[1];
      est.gamma = 0.0;
      est.constant = std::exp(beta[0]);
      for (std::size_t i = 0; i < m; ++i) fitted[i] = beta[0] - beta[1] * std::log(ts[i]);
      break;
    }
  }

  double rss = 0.0;
  est.residuals.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    est.residuals[i] = logz[i] - fitted[i];
    rss += est.residuals[i] * est.residuals[i];
  }
  est.residual_rms = std::sqrt(rss / static_cast<double>(m));
  if (est.residual_rms > fopt.poor_fit_rms)
    throw PoorFit("log-fit residual rms " + format_g17(est.residual_rms) +
                  " exceeds " + format_g17(fopt.poor_fit_rms));
  return est;
}

}  // namespace penalab
