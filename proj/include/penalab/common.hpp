#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace penalab {

inline constexpr double kSqrt2OverPi = 0.79788456080286541;  // sqrt(2/pi)
inline constexpr double kSqrt2Pi = 2.5066282746310002;       // sqrt(2*pi)
inline constexpr double kPi = 3.14159265358979324;

// ---------------------------------------------------------------------------
// Errors. One exception type per contract failure so callers can catch by name.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PENALAB_DEFINE_ERROR(Name)                        \
  class Name : public Error {                             \
   public:                                                \
    explicit Name(const std::string& m) : Error(#Name ": " + m) {} \
  }

PENALAB_DEFINE_ERROR(InvalidArgument);
PENALAB_DEFINE_ERROR(UnclassifiablePotential);
PENALAB_DEFINE_ERROR(NonPositivePhi);
PENALAB_DEFINE_ERROR(NonConvergedShooting);
PENALAB_DEFINE_ERROR(NoSignChange);
PENALAB_DEFINE_ERROR(UnknownFormula);
PENALAB_DEFINE_ERROR(UnstableScheme);
PENALAB_DEFINE_ERROR(DomainTooNarrow);
PENALAB_DEFINE_ERROR(TailNotCovered);
PENALAB_DEFINE_ERROR(PoorFit);
PENALAB_DEFINE_ERROR(SeriesNotConverged);
PENALAB_DEFINE_ERROR(InadmissibleParams);
PENALAB_DEFINE_ERROR(UnsupportedPotential);
PENALAB_DEFINE_ERROR(BracketingFailed);
PENALAB_DEFINE_ERROR(InversionFailed);
PENALAB_DEFINE_ERROR(NotConverged);
PENALAB_DEFINE_ERROR(DivergentScale);
PENALAB_DEFINE_ERROR(ConfigError);

#undef PENALAB_DEFINE_ERROR

// ---------------------------------------------------------------------------
// Counter-based randomness: every path owns an independent stream derived from
// (seed, stream index), so ensemble results do not depend on execution order.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream)
      : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1))) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }  // in (0,1)
  long long poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<long long> d(mean);
    return d(engine_);
  }
  double gamma(double shape) {
    if (shape <= 0.0) return 0.0;
    std::gamma_distribution<double> d(shape, 1.0);
    return d(engine_);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{
      std::numeric_limits<double>::min(), 1.0};
};

// ---------------------------------------------------------------------------
// Parallel chunked map with deterministic, order-independent reduction.
// PENAL_LAB_THREADS caps the worker count.
// ---------------------------------------------------------------------------

int thread_budget();

// Runs f(chunk_index, begin, end) over [0,n) split into fixed chunks. Chunks
// may run on any worker; results must be stored per chunk and combined by the
// caller in chunk order.
void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& f);

struct McResult {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

// Monte Carlo mean over per-item values with chunk-ordered accumulation.
// value(i, stream) must be a pure function of (i, its stream).
McResult mc_mean(std::size_t n, std::uint64_t seed,
                 const std::function<double(std::size_t, RandomStream&)>& value);

// ---------------------------------------------------------------------------
// Small numerics: Gauss-Legendre rules, linear fits.
// ---------------------------------------------------------------------------

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1]; cached per n.
const Quadrature& gauss_legendre(std::size_t n);

double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    std::size_t n);

// Ordinary least squares for y ~ sum_j beta_j basis_j; returns beta.
std::vector<double> least_squares(const std::vector<std::vector<double>>& basis,
                                  const std::vector<double>& y);

inline double lerp_clamped(const std::vector<double>& xs, const std::vector<double>& ys,
                           double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t i = static_cast<std::size_t>(it - xs.begin());
  double w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] * (1.0 - w) + ys[i] * w;
}

// ---------------------------------------------------------------------------
// Formatting / CSV. All numeric output goes through format_g17 so that a rerun
// with identical inputs produces identical bytes.
// ---------------------------------------------------------------------------

std::string format_g17(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(const std::vector<double>& row);
  void add_row_raw(const std::vector<std::string>& row);
  const std::string& content() const { return content_; }
  void write_file(const std::string& path) const;

 private:
  std::string content_;
  std::size_t columns_;
};

}  // namespace penalab
