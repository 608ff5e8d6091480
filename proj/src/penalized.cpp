#include "penalab/penalized.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

namespace penalab {

namespace {

// Tabulated drift with asymptotic extension; linear interpolation is enough
// for the SDE (the Euler error dominates).
struct DriftTable {
  const PhiProfile* phi;
  std::vector<double> drift_nodes;

  explicit DriftTable(const PhiProfile& p) : phi(&p) {
    drift_nodes.resize(p.grid.size());
    for (std::size_t i = 0; i < p.grid.size(); ++i)
      drift_nodes[i] = p.derivs[i] / p.values[i];
  }
  double operator()(double x) const {
    if (x <= phi->grid.front() || x >= phi->grid.back()) return phi->drift_at(x);
    return lerp_clamped(phi->grid, drift_nodes, x);
  }
};

}  // namespace

PathBundle simulate(const DiffusionSpec& spec, std::size_t n_paths,
                    std::uint64_t seed, std::vector<double> record_times) {
  if (spec.dt <= 0 || spec.t_max < 0) throw InvalidArgument("simulate: bad dt/t_max");
  if (record_times.empty()) record_times = {spec.t_max};
  std::sort(record_times.begin(), record_times.end());
  if (record_times.back() > spec.t_max + 1e-12)
    throw InvalidArgument("simulate: record time beyond t_max");

  DriftTable drift(spec.phi);
  const std::size_t n_steps = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(spec.t_max / spec.dt)));
  const double dt = spec.t_max / static_cast<double>(n_steps);
  const double sdt = std::sqrt(dt);
  const double mu = spec.bessel_mu.value_or(0.0);
  const bool radial = spec.bessel_mu.has_value();
  const double x_floor = 0.5 * sdt;

  PathBundle pb;
  pb.times = record_times;
  pb.n_paths = n_paths;
  pb.seed = seed;
  pb.data.assign(n_paths * record_times.size(), 0.0);
  const std::size_t nt = record_times.size();

  // map recording times onto steps
  std::vector<std::size_t> record_step(nt);
  for (std::size_t j = 0; j < nt; ++j)
    record_step[j] = static_cast<std::size_t>(std::llround(record_times[j] / dt));

  parallel_chunks(n_paths, 2048, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      RandomStream rs(seed, i);
      double x = spec.x0;
      std::size_t rec = 0;
      while (rec < nt && record_step[rec] == 0) pb.data[i * nt + rec++] = x;
      for (std::size_t k = 1; k <= n_steps && rec < nt; ++k) {
        double b_drift = drift(x);
        if (radial)
          b_drift += (2.0 * mu + 1.0) / (2.0 * std::max(x, x_floor));
        x += b_drift * dt + sdt * rs.normal();
        if (radial) x = std::abs(x);  // reflected proposal at the origin
        while (rec < nt && record_step[rec] == k) pb.data[i * nt + rec++] = x;
      }
    }
  });
  return pb;
}

// ---------------------------------------------------------------------------

namespace {

template <typename Potential>
HTransformReport h_transform_impl(const Potential& v, const PhiProfile& phi, double x,
                                  double t, std::size_t n_paths, std::uint64_t seed,
                                  double dt, const PdeOptions& pde_opt) {
  HTransformReport rep;
  rep.t = t;
  rep.x = x;

  PdeOptions opt = pde_opt;
  opt.t_max = t;
  double width = 8.0 * std::sqrt(t) + 8.0 + std::abs(x);
  auto zs = solve_pde_z(v, {-width, width}, opt);
  std::size_t ti = zs.times.size() - 1;
  rep.z_lhs = std::exp(0.5 * phi.gamma_shift * t) * zs.at(ti, zs.nearest_x(x));

  DiffusionSpec spec;
  spec.phi = phi;
  spec.x0 = x;
  spec.dt = dt;
  spec.t_max = t;
  auto pb = simulate(spec, n_paths, seed);
  const std::size_t nt = pb.times.size();
  const std::size_t chunk = 4096;
  const std::size_t n_chunks = (n_paths + chunk - 1) / chunk;
  std::vector<double> sums(n_chunks, 0.0), sqs(n_chunks, 0.0);
  parallel_chunks(n_paths, chunk, [&](std::size_t c, std::size_t b, std::size_t e) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      double w = phi.value_at(x) / phi.value_at(pb.at(i, nt - 1));
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
  rep.rhs_mean = s / static_cast<double>(n_paths);
  rep.rhs_stderr = std::sqrt(
      std::max(0.0, (s2 - s * s / static_cast<double>(n_paths)) /
                        static_cast<double>(n_paths - 1)) /
      static_cast<double>(n_paths));
  return rep;
}

}  // namespace

HTransformReport h_transform_check(const RadonPotential& v, const PhiProfile& phi,
                                   double x, double t, std::size_t n_paths,
                                   std::uint64_t seed, double dt,
                                   const PdeOptions& pde_opt) {
  return h_transform_impl(v, phi, x, t, n_paths, seed, dt, pde_opt);
}

HTransformReport h_transform_check(const SignedPotential& v, const PhiProfile& phi,
                                   double x, double t, std::size_t n_paths,
                                   std::uint64_t seed, double dt,
                                   const PdeOptions& pde_opt) {
  return h_transform_impl(v, phi, x, t, n_paths, seed, dt, pde_opt);
}

// ---------------------------------------------------------------------------

ScaleData exit_probabilities(const PhiProfile& phi, double x) {
  if (phi.regime.regime != Regime::Integrable)
    throw DivergentScale("scale integral diverges outside the integrable regime");
  if (phi.left_asym.kind != EdgeKind::Affine || phi.right_asym.kind != EdgeKind::Affine)
    throw DivergentScale("affine tails required for the closed-form tail integrals");
  if (!(phi.left_asym.slope < 0.0) || !(phi.right_asym.slope > 0.0))
    throw DivergentScale("tail slopes do not grow; scale integral diverges");

  ScaleData out;
  // cellwise exact integral of 1/phi^2 for the chordwise-linear profile:
  // int dx / (v0 + s x)(v1 ...) = h/(v0 v1)
  const std::size_t n = phi.grid.size();
  out.s_grid = phi.grid;
  out.s_values.assign(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    double h = phi.grid[i] - phi.grid[i - 1];
    out.s_values[i] =
        out.s_values[i - 1] + h / (phi.values[i - 1] * phi.values[i]);
  }
  double left_tail = 1.0 / (-phi.left_asym.slope * phi.left_asym.value);
  double right_tail = 1.0 / (phi.right_asym.slope * phi.right_asym.value);
  out.rho = left_tail + out.s_values.back() + right_tail;

  double s_x = left_tail;
  if (x <= phi.grid.front()) {
    double v_at = phi.value_at(x);
    s_x = 1.0 / (-phi.left_asym.slope * v_at);  // int_{-inf}^{x} dy/phi^2
  } else if (x >= phi.grid.back()) {
    double v_at = phi.value_at(x);
    s_x = out.rho - 1.0 / (phi.right_asym.slope * v_at);
  } else {
    s_x = left_tail + lerp_clamped(out.s_grid, out.s_values, x);
  }
  out.p_plus = s_x / out.rho;
  out.p_minus = 1.0 - out.p_plus;
  return out;
}

McResult exit_right_fraction_mc(const PhiProfile& phi, double x0, double L,
                                std::size_t n_paths, std::uint64_t seed,
                                double dt_base) {
  DriftTable drift(phi);
  return mc_mean(n_paths, seed, [&](std::size_t, RandomStream& rs) {
    double x = x0;
    for (;;) {
      // step size grows quadratically away from the origin: the drift scale
      // phi'/phi ~ 1/x makes the dynamics self-similar out there
      double dt = std::min(0.5, dt_base * std::max(1.0, x * x / 25.0));
      x += drift(x) * dt + std::sqrt(dt) * rs.normal();
      if (x >= L) return 1.0;
      if (x <= -L) return 0.0;
    }
  });
}

// ---------------------------------------------------------------------------

InvariantDensityReport invariant_density_check(const DiffusionSpec& spec,
                                               double burn_in,
                                               std::size_t n_samples,
                                               std::uint64_t seed,
                                               std::size_t n_bins) {
  if (n_bins < 4) throw InvalidArgument("invariant_density_check: need >= 4 bins");
  DiffusionSpec run = spec;
  run.t_max = burn_in;
  auto pb = simulate(run, n_samples, seed, {burn_in});

  // Equal-probability bins under the target phi^2/int phi^2: cellwise exact
  // CDF for the chordwise-linear profile.
  const PhiProfile& phi = spec.phi;
  const std::size_t n = phi.grid.size();
  std::vector<double> cdf(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    double h = phi.grid[i] - phi.grid[i - 1];
    double v0 = phi.values[i - 1], v1 = phi.values[i];
    cdf[i] = cdf[i - 1] + h * (v0 * v0 + v0 * v1 + v1 * v1) / 3.0;
  }
  double total = cdf.back();
  if (!(total > 0.0)) throw InvalidArgument("invariant_density_check: empty profile");

  InvariantDensityReport rep;
  rep.bin_edges.resize(n_bins + 1);
  rep.bin_edges.front() = -std::numeric_limits<double>::infinity();
  rep.bin_edges.back() = std::numeric_limits<double>::infinity();
  for (std::size_t b = 1; b < n_bins; ++b) {
    double target = total * static_cast<double>(b) / static_cast<double>(n_bins);
    auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
    std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()),
                                          n - 1);
    if (j == 0) j = 1;
    double c0 = cdf[j - 1], c1 = cdf[j];
    double w = c1 > c0 ? (target - c0) / (c1 - c0) : 0.5;
    rep.bin_edges[b] = phi.grid[j - 1] + w * (phi.grid[j] - phi.grid[j - 1]);
  }

  rep.observed.assign(n_bins, 0.0);
  rep.expected.assign(n_bins, static_cast<double>(n_samples) / n_bins);
  for (std::size_t i = 0; i < n_samples; ++i) {
    double x = pb.at(i, 0);
    std::size_t b =
        static_cast<std::size_t>(std::upper_bound(rep.bin_edges.begin(),
                                                  rep.bin_edges.end(), x) -
                                 rep.bin_edges.begin());
    b = std::min(std::max<std::size_t>(b, 1) - 1, n_bins - 1);
    rep.observed[b] += 1.0;
  }
  double chi2 = 0.0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    double d = rep.observed[b] - rep.expected[b];
    chi2 += d * d / rep.expected[b];
  }
  rep.chi_square = chi2;
  rep.dof = n_bins - 1;
  boost::math::chi_squared_distribution<double> dist(static_cast<double>(rep.dof));
  rep.threshold_99 = boost::math::quantile(dist, 0.99);
  return rep;
}

// ---------------------------------------------------------------------------

double ks_p_value(double d, std::size_t n, std::size_t m) {
  double ne = static_cast<double>(n) * static_cast<double>(m) /
              static_cast<double>(n + m);
  double lam = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    double term = 2.0 * (k % 2 == 1 ? 1.0 : -1.0) *
                  std::exp(-2.0 * lam * lam * static_cast<double>(k) *
                           static_cast<double>(k));
    sum += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::min(1.0, std::max(0.0, sum));
}

KsReport bang_bang_identity_check(double lambda, double t, std::size_t n_paths,
                                  std::uint64_t seed, double dt) {
  if (lambda < 0.0 || t < 0.0) throw InvalidArgument("bang-bang check: bad args");
  KsReport rep;
  rep.n = rep.m = n_paths;
  if (t == 0.0) {
    rep.statistic = 0.0;
    rep.p_value = 1.0;
    return rep;
  }

  // side A: |X_t| for dX = dB - lambda sgn(X) dt from 0 (Euler)
  std::vector<double> a(n_paths), b(n_paths);
  const std::size_t n_steps = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(t / dt)));
  const double h = t / static_cast<double>(n_steps);
  const double sh = std::sqrt(h);
  parallel_chunks(n_paths, 4096, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      RandomStream rs(seed, i);
      double x = 0.0;
      for (std::size_t k = 0; k < n_steps; ++k)
        x += -lambda * (x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0)) * h + sh * rs.normal();
      a[i] = std::abs(x);
    }
  });

  // side B: S_t - B_t for B^{(lambda)}, sampled exactly: draw the endpoint,
  // then the running maximum from the Brownian-bridge law (the drift does not
  // change the bridge).
  const std::uint64_t seed_b = splitmix64(seed ^ 0xb5297a4d382e5a3aULL);
  parallel_chunks(n_paths, 4096, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      RandomStream rs(seed_b, i);
      double bt = lambda * t + std::sqrt(t) * rs.normal();
      double u = rs.uniform();
      double st = 0.5 * (bt + std::sqrt(bt * bt - 2.0 * t * std::log(u)));
      b[i] = st - bt;
    }
  });

  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < n_paths && ib < n_paths) {
    double va = a[ia], vb = b[ib];
    if (va <= vb) ++ia;
    if (vb <= va) ++ib;
    double fa = static_cast<double>(ia) / n_paths;
    double fb = static_cast<double>(ib) / n_paths;
    d = std::max(d, std::abs(fa - fb));
  }
  rep.statistic = d;
  rep.p_value = ks_p_value(d, n_paths, n_paths);
  return rep;
}

}  // namespace penalab
