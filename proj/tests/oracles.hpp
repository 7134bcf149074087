#pragma once

// Independent dense reference computations used to check the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qrev/rate_matrix.hpp"

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense to_dense(const qrev::RateMatrix& q) {
  Dense d(q.size(), std::vector<double>(q.size(), 0.0));
  for (const auto& t : q.triplets()) d[t.from][t.to] += t.value;
  return d;
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> gauss_solve(Dense a, std::vector<double> b) {
  const std::size_t n = a.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (a[piv][c] == 0.0) throw std::runtime_error("singular system");
    std::swap(a[piv], a[c]);
    std::swap(b[piv], b[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

/// Stationary distribution of a dense rate matrix: balance equations with the
/// first one replaced by sum(pi) = 1. Self-loops are included on both sides.
inline std::vector<double> dense_stationary(const Dense& q) {
  const std::size_t n = q.size();
  Dense a(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    double exit = 0.0;
    for (std::size_t k = 0; k < n; ++k) exit += q[j][k];
    for (std::size_t i = 0; i < n; ++i) a[j][i] = q[i][j];
    a[j][j] -= exit;
  }
  std::vector<double> b(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) a[0][i] = 1.0;
  b[0] = 1.0;
  return gauss_solve(std::move(a), std::move(b));
}

/// Left eigenvector for eigenvalue 1 of a dense stochastic matrix by power
/// iteration on the lazy chain (I + P) / 2, normalized to sum 1.
inline std::vector<double> power_invariant(const Dense& p, int iterations = 200000) {
  const std::size_t n = p.size();
  std::vector<double> v(n, 1.0 / static_cast<double>(n)), w(n);
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.5 * v[j];
      for (std::size_t i = 0; i < n; ++i) s += 0.5 * v[i] * p[i][j];
      w[j] = s;
    }
    double diff = 0.0;
    for (std::size_t j = 0; j < n; ++j) diff = std::max(diff, std::abs(w[j] - v[j]));
    v.swap(w);
    if (diff < 1e-17) break;
  }
  double s = 0.0;
  for (double x : v) s += x;
  for (auto& x : v) x /= s;
  return v;
}

/// Random irreducible chain: a Hamiltonian cycle plus random extra edges.
inline qrev::RateMatrix random_irreducible(std::size_t n, std::mt19937_64& rng,
                                           double density = 0.3) {
  std::uniform_real_distribution<double> rate(0.1, 5.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<qrev::Triplet> t;
  for (std::size_t k = 0; k < n; ++k) t.push_back({perm[k], perm[(k + 1) % n], rate(rng)});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && coin(rng) < density) t.push_back({i, j, rate(rng)});
    }
  }
  return qrev::RateMatrix(qrev::StateSpace::line(static_cast<int>(n) - 1), t);
}

}  // namespace oracle
