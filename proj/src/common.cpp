#include "penalab/common.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <atomic>

namespace penalab {

int thread_budget() {
  static int budget = [] {
    if (const char* env = std::getenv("PENAL_LAB_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return budget;
}

void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& f) {
  if (n == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
  int workers = std::min<std::size_t>(thread_budget(), n_chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c)
      f(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
    return;
  }
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (;;) {
      std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) break;
      f(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
}

McResult mc_mean(std::size_t n, std::uint64_t seed,
                 const std::function<double(std::size_t, RandomStream&)>& value) {
  if (n == 0) throw InvalidArgument("mc_mean: n must be >= 1");
  const std::size_t chunk = 4096;
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<double> sums(n_chunks, 0.0), sq_sums(n_chunks, 0.0);
  parallel_chunks(n, chunk, [&](std::size_t c, std::size_t b, std::size_t e) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      RandomStream rs(seed, i);
      double v = value(i, rs);
      s += v;
      s2 += v * v;
    }
    sums[c] = s;
    sq_sums[c] = s2;
  });
  double s = 0.0, s2 = 0.0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    s += sums[c];
    s2 += sq_sums[c];
  }
  McResult r;
  r.n = n;
  r.mean = s / static_cast<double>(n);
  if (n > 1) {
    double var = (s2 - s * s / static_cast<double>(n)) / static_cast<double>(n - 1);
    r.std_error = std::sqrt(std::max(0.0, var) / static_cast<double>(n));
  }
  return r;
}

const Quadrature& gauss_legendre(std::size_t n) {
  static std::map<std::size_t, Quadrature> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    q.nodes[i] = -x;
    q.nodes[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    q.weights[i] = w;
    q.weights[n - 1 - i] = w;
  }
  return cache.emplace(n, std::move(q)).first->second;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    std::size_t n) {
  const Quadrature& q = gauss_legendre(n);
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += q.weights[i] * f(mid + half * q.nodes[i]);
  return s * half;
}

std::vector<double> least_squares(const std::vector<std::vector<double>>& basis,
                                  const std::vector<double>& y) {
  const std::size_t p = basis.size();
  if (p == 0) throw InvalidArgument("least_squares: empty basis");
  const std::size_t m = y.size();
  std::vector<std::vector<double>> ata(p, std::vector<double>(p, 0.0));
  std::vector<double> aty(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    if (basis[j].size() != m) throw InvalidArgument("least_squares: basis size mismatch");
    for (std::size_t k = j; k < p; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += basis[j][i] * basis[k][i];
      ata[j][k] = ata[k][j] = s;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += basis[j][i] * y[i];
    aty[j] = s;
  }
  // Gaussian elimination with partial pivoting on the small normal system.
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < p; ++r)
      if (std::abs(ata[r][col]) > std::abs(ata[piv][col])) piv = r;
    std::swap(ata[col], ata[piv]);
    std::swap(aty[col], aty[piv]);
    if (ata[col][col] == 0.0) throw InvalidArgument("least_squares: singular system");
    for (std::size_t r = col + 1; r < p; ++r) {
      double f = ata[r][col] / ata[col][col];
      for (std::size_t k = col; k < p; ++k) ata[r][k] -= f * ata[col][k];
      aty[r] -= f * aty[col];
    }
  }
  std::vector<double> beta(p);
  for (std::size_t r = p; r-- > 0;) {
    double s = aty[r];
    for (std::size_t k = r + 1; k < p; ++k) s -= ata[r][k] * beta[k];
    beta[r] = s / ata[r][r];
  }
  return beta;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) content_ += ',';
    content_ += header[i];
  }
  content_ += '\n';
}

void CsvWriter::add_row(const std::vector<double>& row) {
  if (row.size() != columns_) throw InvalidArgument("CsvWriter: column mismatch");
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) content_ += ',';
    content_ += format_g17(row[i]);
  }
  content_ += '\n';
}

void CsvWriter::add_row_raw(const std::vector<std::string>& row) {
  if (row.size() != columns_) throw InvalidArgument("CsvWriter: column mismatch");
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) content_ += ',';
    content_ += row[i];
  }
  content_ += '\n';
}

void CsvWriter::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file " + path);
  out << content_;
}

}  // namespace penalab
