#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace oracle {

namespace {

// Solves A f = rhs for the chosen columns by Gaussian elimination. Returns
// false unless the system has exactly one solution.
bool solve_basis(const std::vector<std::vector<double>>& a_full, const std::vector<int>& cols,
                 const std::vector<double>& rhs, std::vector<double>& f) {
  const std::size_t rows = a_full.size();
  const std::size_t n = cols.size();
  std::vector<std::vector<double>> m(rows, std::vector<double>(n + 1));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < n; ++j) m[i][j] = a_full[i][cols[j]];
    m[i][n] = rhs[i];
  }
  std::size_t r = 0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = r;
    for (std::size_t i = r; i < rows; ++i)
      if (std::abs(m[i][c]) > std::abs(m[piv][c])) piv = i;
    if (r >= rows || std::abs(m[piv][c]) < 1e-12) return false;
    std::swap(m[r], m[piv]);
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r) continue;
      const double factor = m[i][c] / m[r][c];
      for (std::size_t j = c; j <= n; ++j) m[i][j] -= factor * m[r][j];
    }
    ++r;
  }
  for (std::size_t i = r; i < rows; ++i)
    if (std::abs(m[i][n]) > 1e-9) return false;
  f.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) f[i] = m[i][n] / m[i][i];
  return true;
}

}  // namespace

double coupling_vertex_min(std::span<const double> a, std::span<const double> b,
                           std::span<const double> cost) {
  const std::size_t p = a.size(), q = b.size();
  if (p == 0 || q == 0 || p > 4 || q > 4) throw std::invalid_argument("oracle: bad sizes");
  const std::size_t vars = p * q;
  std::vector<std::vector<double>> eq(p + q, std::vector<double>(vars, 0.0));
  std::vector<double> rhs(p + q);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      eq[i][i * q + j] = 1.0;
      eq[p + j][i * q + j] = 1.0;
    }
    rhs[i] = a[i];
  }
  for (std::size_t j = 0; j < q; ++j) rhs[p + j] = b[j];

  const std::size_t basis = p + q - 1;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> cols;
  std::vector<double> f;
  for (unsigned mask = 0; mask < (1u << vars); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != basis) continue;
    cols.clear();
    for (std::size_t v = 0; v < vars; ++v)
      if (mask & (1u << v)) cols.push_back(static_cast<int>(v));
    if (!solve_basis(eq, cols, rhs, f)) continue;
    bool feasible = true;
    double total = 0.0;
    for (std::size_t t = 0; t < cols.size(); ++t) {
      if (f[t] < -1e-12) feasible = false;
      total += f[t] * cost[cols[t]];
    }
    if (feasible) best = std::min(best, total);
  }
  return best;
}

double w1_cdf_1d(std::vector<double> xs, std::vector<double> ys) {
  std::vector<double> all = xs;
  all.insert(all.end(), ys.begin(), ys.end());
  std::sort(all.begin(), all.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double total = 0.0;
  std::size_t ix = 0, iy = 0;
  for (std::size_t t = 0; t + 1 < all.size(); ++t) {
    while (ix < xs.size() && xs[ix] <= all[t]) ++ix;
    while (iy < ys.size() && ys[iy] <= all[t]) ++iy;
    const double fx = static_cast<double>(ix) / static_cast<double>(xs.size());
    const double fy = static_cast<double>(iy) / static_cast<double>(ys.size());
    total += std::abs(fx - fy) * (all[t + 1] - all[t]);
  }
  return total;
}

double tau_obs_scalar(std::span<const double> x, std::size_t m, std::size_t k, std::size_t r,
                      bool loo, std::span<const std::size_t> source) {
  const long long n_signed = static_cast<long long>(x.size()) - static_cast<long long>(m) -
                             static_cast<long long>(k) + 1;
  if (n_signed <= 0) return 0.0;
  const std::size_t n = static_cast<std::size_t>(n_signed);
  // With leave-one-out, a lag whose pair count leaves no more than r other
  // points is reported as zero.
  if (loo && n <= r + 1) return 0.0;
  std::vector<std::vector<double>> z(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < m; ++s) z[i].push_back(x[i + s]);
    y[i] = x[i + m - 1 + k];
  }
  std::vector<double> targets(n);
  for (std::size_t j = 0; j < n; ++j) targets[j] = source.empty() ? y[j] : y[source[j]];

  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t j = 0; j < n; ++j) {
      if (loo && j == i) continue;
      double d = 0.0;
      for (std::size_t s = 0; s < m; ++s) d += (z[i][s] - z[j][s]) * (z[i][s] - z[j][s]);
      cand.emplace_back(std::sqrt(d), j);
    }
    std::sort(cand.begin(), cand.end());
    const std::size_t take = std::min(r, cand.size());
    if (take == 0) continue;
    std::vector<double> local;
    for (std::size_t t = 0; t < take; ++t) local.push_back(targets[cand[t].second]);
    best = std::max(best, w1_cdf_1d(local, targets));
  }
  return best;
}

std::vector<double> lake_value_iteration(double gamma) {
  static const char* map[4] = {"SFFF", "FHFH", "FFFH", "HFFG"};
  auto tile = [](int s) { return map[s / 4][s % 4]; };
  auto next = [](int s, int a) {
    int row = s / 4, col = s % 4;
    if (a == 0) col = std::max(0, col - 1);
    if (a == 1) row = std::min(3, row + 1);
    if (a == 2) col = std::min(3, col + 1);
    if (a == 3) row = std::max(0, row - 1);
    return row * 4 + col;
  };
  std::vector<double> q(64, 0.0);
  for (int sweep = 0; sweep < 2000; ++sweep) {
    std::vector<double> nq(64, 0.0);
    for (int s = 0; s < 16; ++s) {
      if (tile(s) == 'H' || tile(s) == 'G') continue;
      for (int a = 0; a < 4; ++a) {
        const int t = next(s, a);
        const double reward = tile(t) == 'G' ? 1.0 : 0.0;
        double cont = 0.0;
        if (tile(t) != 'H' && tile(t) != 'G')
          cont = *std::max_element(q.begin() + t * 4, q.begin() + t * 4 + 4);
        nq[s * 4 + a] = reward + gamma * cont;
      }
    }
    q = nq;
  }
  return q;
}

}  // namespace oracle
