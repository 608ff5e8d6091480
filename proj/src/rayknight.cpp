#include "penalab/rayknight.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace penalab {

namespace {

double support_end(const RadonPotential& v) {
  double end = 0.0;
  if (v.support_bounds) return std::max(0.0, v.support_bounds->second);
  if (!v.grid.empty()) end = std::max(end, v.grid.back());
  for (const Atom& a : v.atoms) end = std::max(end, a.location);
  return end;
}

void require_compact_halfline(const RadonPotential& v) {
  auto diags = validate(v);
  // an all-zero half is fine here; only structural defects matter
  for (const auto& d : diags)
    if (d.code != DiagnosticCode::EmptyPotential)
      throw InvalidArgument("phi_lambda: invalid potential: " + d.message);
  if (!v.grid.empty() && v.grid.front() < -1e-12)
    throw UnsupportedPotential("phi_lambda expects support in [0, inf)");
  for (const Atom& a : v.atoms)
    if (a.location < 0.0)
      throw UnsupportedPotential("phi_lambda expects atoms in [0, inf)");
  if (v.tails.right_limit == TailLimit::Infinite ||
      (v.tails.right_limit == TailLimit::Finite && v.tails.right_limit_value > 0.0))
    throw UnsupportedPotential("phi_lambda needs a compactly supported measure");
}

// One leftward RK4 pass of (1/2) phi'' = phi lambda(dx) from the flat tail;
// atoms cross as derivative jumps of 2 m phi. Returns (phi(0), phi'(0)) for
// the solution normalized to phi == 1 beyond the support.
std::pair<double, double> integrate_phi_lambda(const RadonPotential& v) {
  const double b = support_end(v);
  if (b <= 0.0) {
    return {1.0, 0.0};  // nothing on (0, inf): phi == 1
  }
  std::set<double> cuts{0.0, b};
  for (double bp : v.breakpoints)
    if (bp > 0.0 && bp < b) cuts.insert(bp);
  for (const Atom& a : v.atoms)
    if (a.location > 0.0 && a.location < b) cuts.insert(a.location);
  for (double g : v.grid)
    if (g > 0.0 && g < b) cuts.insert(g);
  std::vector<double> nodes(cuts.begin(), cuts.end());

  double phi = 1.0, dphi = 0.0;
  // atom exactly at b: crossing it leftward removes its jump
  for (const Atom& a : v.atoms)
    if (a.location == b) dphi -= 2.0 * a.mass * phi;

  const double h_target = 5e-4 * std::max(1.0, b);
  for (std::size_t seg = nodes.size() - 1; seg-- > 0;) {
    double hi = nodes[seg + 1], lo = nodes[seg];
    std::size_t nsub = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil((hi - lo) / h_target)));
    double h = (hi - lo) / static_cast<double>(nsub);
    double x = hi;
    // sample strictly inside the segment: at a jump node the density value
    // belongs to one side only, and roundoff drift must not cross it either
    const double nudge = 1e-9 * (hi - lo);
    const double clo = lo + nudge, chi = hi - nudge;
    auto f = [&v, clo, chi](double xx, double p, double dp) {
      return std::make_pair(dp, 2.0 * v.density_at(std::clamp(xx, clo, chi)) * p);
    };
    for (std::size_t k = 0; k < nsub; ++k) {
      // RK4 with step -h
      auto [k1p, k1d] = f(x, phi, dphi);
      auto [k2p, k2d] = f(x - 0.5 * h, phi - 0.5 * h * k1p, dphi - 0.5 * h * k1d);
      auto [k3p, k3d] = f(x - 0.5 * h, phi - 0.5 * h * k2p, dphi - 0.5 * h * k2d);
      auto [k4p, k4d] = f(x - h, phi - h * k3p, dphi - h * k3d);
      phi -= h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
      dphi -= h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d);
      x = hi - static_cast<double>(k + 1) * h;
    }
    // atom at the segment's lower node (crossed when continuing leftward)
    if (lo > 0.0)
      for (const Atom& a : v.atoms)
        if (a.location == lo) dphi -= 2.0 * a.mass * phi;
  }
  return {phi, dphi};
}

RadonPotential halfline_restriction(const RadonPotential& v, bool positive_side) {
  RadonPotential out;
  double sgn = positive_side ? 1.0 : -1.0;
  std::set<double> nodes{0.0};
  for (double g : v.grid) {
    double y = sgn * g;
    if (y > 0.0) nodes.insert(y);
  }
  for (double b : v.breakpoints) {
    double y = sgn * b;
    if (y > 0.0) nodes.insert(y);
  }
  out.grid.assign(nodes.begin(), nodes.end());
  out.density.resize(out.grid.size());
  for (std::size_t i = 0; i < out.grid.size(); ++i)
    out.density[i] = v.density_at(sgn * out.grid[i]);
  if (v.density_fn) {
    auto fn = v.density_fn;
    out.density_fn = [fn, sgn](double y) { return y >= 0.0 ? fn(sgn * y) : 0.0; };
  }
  for (double b : v.breakpoints) {
    double y = sgn * b;
    if (y > 0.0) out.breakpoints.push_back(y);
  }
  std::sort(out.breakpoints.begin(), out.breakpoints.end());
  for (const Atom& a : v.atoms) {
    double y = sgn * a.location;
    if (y > 0.0) out.atoms.push_back({y, a.mass});
  }
  std::sort(out.atoms.begin(), out.atoms.end(),
            [](const Atom& a, const Atom& b) { return a.location < b.location; });
  out.tails.left_first_moment_finite = true;
  out.tails.right_first_moment_finite = true;
  return out;
}

void require_compact(const RadonPotential& v) {
  const TailFlags& t = v.tails;
  auto infinite = [](TailLimit l, double val) {
    return l == TailLimit::Infinite || (l == TailLimit::Finite && val > 0.0);
  };
  if (infinite(t.left_limit, t.left_limit_value) ||
      infinite(t.right_limit, t.right_limit_value) || t.slow_decay_alpha ||
      t.critical_lambda || t.right_power_alpha)
    throw UnsupportedPotential("h_of_v needs a compactly supported V");
  for (const Atom& a : v.atoms)
    if (a.location == 0.0)
      throw UnsupportedPotential(
          "an atom exactly at 0 is not covered by the V+/V- splitting");
}

bool sides_symmetric(const RadonPotential& plus, const RadonPotential& minus) {
  double end = std::max(support_end(plus), support_end(minus));
  for (int i = 0; i <= 64; ++i) {
    double y = end * i / 64.0;
    if (std::abs(plus.density_at(y) - minus.density_at(y)) > 1e-12) return false;
  }
  if (plus.atoms.size() != minus.atoms.size()) return false;
  for (std::size_t i = 0; i < plus.atoms.size(); ++i) {
    if (std::abs(plus.atoms[i].location - minus.atoms[i].location) > 1e-12) return false;
    if (std::abs(plus.atoms[i].mass - minus.atoms[i].mass) > 1e-12) return false;
  }
  return true;
}

// <Y, lambda> along a sampled BESQ path: trapezoid for the density part plus
// exact atom terms (path values interpolated linearly between sample times).
double pairing_along_path(const PathBundle& pb, std::size_t path,
                          const RadonPotential& v) {
  double acc = 0.0;
  const std::size_t nt = pb.times.size();
  for (std::size_t k = 0; k + 1 < nt; ++k) {
    double s0 = pb.times[k], s1 = pb.times[k + 1];
    double f0 = pb.at(path, k) * v.density_at(s0);
    double f1 = pb.at(path, k + 1) * v.density_at(s1);
    acc += 0.5 * (f0 + f1) * (s1 - s0);
  }
  for (const Atom& a : v.atoms) {
    auto it = std::lower_bound(pb.times.begin(), pb.times.end(), a.location);
    std::size_t j = static_cast<std::size_t>(it - pb.times.begin());
    double y;
    if (j == 0) {
      y = pb.at(path, 0);
    } else if (j >= nt) {
      y = pb.at(path, nt - 1);
    } else {
      double w = (a.location - pb.times[j - 1]) / (pb.times[j] - pb.times[j - 1]);
      y = (1.0 - w) * pb.at(path, j - 1) + w * pb.at(path, j);
    }
    acc += a.mass * y;
  }
  return acc;
}

std::vector<double> sample_grid_for(const RadonPotential& v, double ds) {
  double end = std::max(support_end(v), ds);
  std::set<double> times{0.0, end};
  std::size_t n = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(end / ds)));
  for (std::size_t i = 1; i < n; ++i) times.insert(end * static_cast<double>(i) / n);
  for (const Atom& a : v.atoms)
    if (a.location > 0.0 && a.location < end) times.insert(a.location);
  for (double b : v.breakpoints)
    if (b > 0.0 && b < end) times.insert(b);
  return {times.begin(), times.end()};
}

}  // namespace

LevyExponents phi_lambda(const RadonPotential& v_half_line) {
  require_compact_halfline(v_half_line);
  auto [phi0, dphi0] = integrate_phi_lambda(v_half_line);
  if (!(phi0 > 0.0))
    throw NonConvergedShooting("phi_lambda lost positivity on the way to 0");
  LevyExponents e;
  // normalize so phi(0) = 1; the flat tail value becomes 1/phi0
  e.phi_inf = 1.0 / phi0;
  e.phi_prime0 = dphi0 / phi0;
  e.M = -0.5 * e.phi_prime0;
  e.N = -0.5 * std::log(e.phi_inf);
  return e;
}

McResult besq_laplace_mc(double delta, double x0, const RadonPotential& v_measure,
                         std::size_t n_paths, std::uint64_t seed, double ds) {
  auto times = sample_grid_for(v_measure, ds);
  PathBundle pb = sample_besq(delta, x0, times, n_paths, seed);
  const std::size_t chunk = 2048;
  const std::size_t n_chunks = (n_paths + chunk - 1) / chunk;
  std::vector<double> sums(n_chunks, 0.0), sqs(n_chunks, 0.0);
  parallel_chunks(n_paths, chunk, [&](std::size_t c, std::size_t b, std::size_t e) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      double w = std::exp(-pairing_along_path(pb, i, v_measure));
      s += w;
      s2 += w * w;
    }
    sums[c] = s;
    sqs[c] = s2;
  });
  double s = 0.0, s2 = 0.0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    s += sums[c];
    s2 += sqs[c];
  }
  McResult r;
  r.n = n_paths;
  r.mean = s / static_cast<double>(n_paths);
  if (n_paths > 1)
    r.std_error = std::sqrt(
        std::max(0.0, (s2 - s * s / static_cast<double>(n_paths)) /
                          static_cast<double>(n_paths - 1)) /
        static_cast<double>(n_paths));
  return r;
}

HValue h_of_v(const RadonPotential& v, HMode mode, const HMcOptions& mc) {
  require_compact(v);
  RadonPotential plus = halfline_restriction(v, true);
  RadonPotential minus = halfline_restriction(v, false);

  LevyExponents ep = phi_lambda(plus);
  LevyExponents em = phi_lambda(minus);

  HValue out;
  out.M_plus = ep.M;
  out.M_minus = em.M;
  out.N_plus = ep.N;
  out.N_minus = em.N;
  out.symmetric = sides_symmetric(plus, minus);

  double msum = ep.M + em.M;
  if (msum < 1e-14) {
    out.divergent = true;
    out.h = std::numeric_limits<double>::infinity();
    return out;
  }

  switch (mode) {
    case HMode::Formula:
      if (out.symmetric) {
        out.h = std::exp(-2.0 * ep.N) / (2.0 * ep.M);
      } else {
        out.h = (std::exp(-2.0 * ep.N) + std::exp(-2.0 * em.N)) / (2.0 * msum);
      }
      break;
    case HMode::Integral: {
      // H = (1/2) int_0^inf [ Q_l^0(V-) Q_l^2(V+) + Q_l^2(V-) Q_l^0(V+) ] dl
      // with Q_l^0 = e^{-lM}, Q_l^2 = e^{-lM} phi(inf); quadrature retained as
      // a consistency check of the closed reduction.
      auto integrand = [&](double l) {
        double q0m = std::exp(-l * em.M), q0p = std::exp(-l * ep.M);
        double q2m = q0m * em.phi_inf, q2p = q0p * ep.phi_inf;
        return 0.5 * (q0m * q2p + q2m * q0p);
      };
      // substitute l = -ln(u)/msum
      double total = integrate_gl(
          [&](double u) { return integrand(-std::log(u) / msum) / (msum * u); },
          1e-12, 1.0, 160);
      out.h = total;
      break;
    }
    case HMode::Mc: {
      const Quadrature& q = gauss_legendre(mc.n_nodes);
      double total = 0.0, var = 0.0;
      for (std::size_t j = 0; j < mc.n_nodes; ++j) {
        double u = 0.5 * (q.nodes[j] + 1.0);
        u = std::min(std::max(u, 1e-12), 1.0 - 1e-12);
        double wq = 0.5 * q.weights[j];
        double l = -std::log(u) / msum;
        double jac = 1.0 / (msum * u);
        std::uint64_t base = mc.seed + 7919ULL * j;
        auto q0m = besq_laplace_mc(0.0, l, minus, mc.n_paths, base + 1, mc.ds);
        auto q2p = besq_laplace_mc(2.0, l, plus, mc.n_paths, base + 2, mc.ds);
        auto q2m = besq_laplace_mc(2.0, l, minus, mc.n_paths, base + 3, mc.ds);
        auto q0p = besq_laplace_mc(0.0, l, plus, mc.n_paths, base + 4, mc.ds);
        double f = 0.5 * (q0m.mean * q2p.mean + q2m.mean * q0p.mean);
        total += wq * jac * f;
        double vf = 0.25 * (std::pow(q0m.mean * q2p.std_error, 2) +
                            std::pow(q2p.mean * q0m.std_error, 2) +
                            std::pow(q2m.mean * q0p.std_error, 2) +
                            std::pow(q0p.mean * q2m.std_error, 2));
        var += wq * wq * jac * jac * vf;
      }
      out.h = total;
      out.std_error = std::sqrt(var);
      break;
    }
  }
  return out;
}

}  // namespace penalab
