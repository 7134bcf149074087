#include "qrev/ctmc.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <deque>

#include "qrev/error.hpp"
#include "qrev/kernels.hpp"

namespace qrev {

std::vector<double> exit_rates(const RateMatrix& q) { return kernels::row_sums(q); }

namespace {

std::size_t reach_count(const RateMatrix& q, bool forward) {
  const std::size_t n = q.size();
  std::vector<char> seen(n, 0);
  std::deque<std::size_t> frontier{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!frontier.empty()) {
    const std::size_t x = frontier.front();
    frontier.pop_front();
    auto next = forward ? q.row_cols(x) : q.col_rows(x);
    for (std::size_t y : next) {
      if (!seen[y]) {
        seen[y] = 1;
        ++count;
        frontier.push_back(y);
      }
    }
  }
  return count;
}

// Entries far in a tail can come back as roundoff-sized negatives. Such
// states are rebuilt from their already positive in-neighbours in BFS order,
// pi(x) = sum pi(x') q(x', x) / a(x), which is exact along birth-death tails.
void fill_underflow(const RateMatrix& q, const std::vector<double>& exit, std::vector<double>& w) {
  const std::size_t n = q.size();
  std::vector<char> set(n, 0), queued(n, 0);
  std::deque<std::size_t> frontier;
  for (std::size_t i = 0; i < n; ++i) set[i] = w[i] > 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!set[i]) continue;
    for (std::size_t j : q.row_cols(i)) {
      if (!set[j] && !queued[j]) {
        queued[j] = 1;
        frontier.push_back(j);
      }
    }
  }
  while (!frontier.empty()) {
    const std::size_t x = frontier.front();
    frontier.pop_front();
    double in = 0.0;
    auto from = q.col_rows(x);
    auto rates = q.col_values(x);
    for (std::size_t k = 0; k < from.size(); ++k) {
      if (from[k] != x && set[from[k]]) in += w[from[k]] * rates[k];
    }
    w[x] = exit[x] > 0.0 ? in / exit[x] : 0.0;
    set[x] = 1;
    for (std::size_t j : q.row_cols(x)) {
      if (!set[j] && !queued[j]) {
        queued[j] = 1;
        frontier.push_back(j);
      }
    }
  }
}

StationarySolve solve_direct(const RateMatrix& q) {
  const std::size_t n = q.size();
  const auto exit = kernels::offdiag_exit_rates(q);
  // A = G^T with G the generator; the last balance equation is replaced by
  // the normalization row. Self-loops never enter G.
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(q.nnz() + 2 * n);
  const auto last = static_cast<int>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    auto cols = q.row_cols(i);
    auto vals = q.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] == i || static_cast<int>(cols[k]) == last) continue;
      entries.emplace_back(static_cast<int>(cols[k]), static_cast<int>(i), vals[k]);
    }
    if (static_cast<int>(i) != last) entries.emplace_back(static_cast<int>(i), static_cast<int>(i), -exit[i]);
    entries.emplace_back(last, static_cast<int>(i), 1.0);
  }
  Eigen::SparseMatrix<double> a(static_cast<int>(n), static_cast<int>(n));
  a.setFromTriplets(entries.begin(), entries.end());
  a.makeCompressed();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<int>(n));
  rhs[last] = 1.0;

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorCode::SolverDidNotConverge, "sparse LU factorization failed: " + lu.lastErrorMessage());
  }
  Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorCode::SolverDidNotConverge, "sparse LU solve failed");
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::max(x[static_cast<int>(i)], 0.0);
  fill_underflow(q, exit, w);
  double total = 0.0;
  for (double v : w) total += v;
  for (auto& v : w) v /= total;
  StationarySolve out{Measure(q.space_ptr(), std::move(w), true), 0.0, SolveMethod::Direct, 1};
  out.residual = kernels::balance_residual(q, out.pi.weights());
  return out;
}

StationarySolve solve_power(const RateMatrix& q, const SolverOptions& opts,
                            std::vector<double> start = {}) {
  const std::size_t n = q.size();
  const auto exit = kernels::offdiag_exit_rates(q);
  const auto full_exit = kernels::row_sums(q);
  const double lambda = 1.01 * *std::max_element(full_exit.begin(), full_exit.end());
  std::vector<double> cur = start.empty() ? std::vector<double>(n, 1.0 / static_cast<double>(n))
                                          : std::move(start);
  std::vector<double> next(n);
  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    kernels::uniformized_step(q, exit, lambda, cur, next);
    double s = 0.0;
    for (double v : next) s += v;
    for (auto& v : next) v /= s;
    const double change = kernels::max_abs_distance(cur, next);
    cur.swap(next);
    if (change <= opts.iter_tol) {
      for (auto& v : cur) v = std::max(v, 0.0);
      fill_underflow(q, exit, cur);
      double total = 0.0;
      for (double v : cur) total += v;
      for (auto& v : cur) v /= total;
      StationarySolve out{Measure(q.space_ptr(), cur, true), 0.0, SolveMethod::Power, it};
      out.residual = kernels::balance_residual(q, out.pi.weights());
      return out;
    }
  }
  throw Error(ErrorCode::SolverDidNotConverge,
              "power iteration did not converge in " + std::to_string(opts.max_iter) + " steps");
}

}  // namespace

bool is_irreducible(const RateMatrix& q) {
  if (q.size() <= 1) return true;
  return reach_count(q, true) == q.size() && reach_count(q, false) == q.size();
}

StationarySolve solve_stationary(const RateMatrix& q, const SolverOptions& opts) {
  if (q.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty state space");
  if (!is_irreducible(q)) throw Error(ErrorCode::NotIrreducible, "rate matrix is not irreducible");
  if (q.size() == 1) {
    return {Measure(q.space_ptr(), {1.0}, true), 0.0, SolveMethod::Direct, 0};
  }
  const bool direct = opts.method == SolveMethod::Direct ||
                      (opts.method == SolveMethod::Auto && q.size() <= kDirectSolveLimit);
  if (direct) {
    try {
      return solve_direct(q);
    } catch (const Error&) {
      if (opts.method == SolveMethod::Direct) throw;
    }
  }
  return solve_power(q, opts);
}

Measure stationary_distribution(const RateMatrix& q, const SolverOptions& opts) {
  return solve_stationary(q, opts).pi;
}

double stationary_residual(const RateMatrix& q, const Measure& pi) {
  if (pi.size() != q.size()) throw Error(ErrorCode::DimensionMismatch, "measure and rate matrix sizes differ");
  return kernels::balance_residual(q, pi.weights());
}

Dtmc::Dtmc(RateMatrix probs, double tol) : probs_(std::move(probs)) {
  for (double v : probs_.values()) {
    if (v > 1.0 + tol) throw Error(ErrorCode::NotStochastic, "transition probability above one");
  }
  if (row_defect() > tol) throw Error(ErrorCode::NotStochastic, "rows do not sum to one");
}

Dtmc Dtmc::unchecked(RateMatrix probs) {
  Dtmc d;
  d.probs_ = std::move(probs);
  return d;
}

double Dtmc::row_defect() const {
  double worst = 0.0;
  for (double s : kernels::row_sums(probs_)) worst = std::max(worst, std::abs(s - 1.0));
  return worst;
}

double dtmc_stationary_residual(const Dtmc& p, const Measure& pi) {
  const auto& m = p.probs();
  double worst = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    auto rows = m.col_rows(j);
    auto vals = m.col_values(j);
    double in = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) in += pi[rows[k]] * vals[k];
    worst = std::max(worst, std::abs(in - pi[j]));
  }
  return worst;
}

Dtmc dtmc_reverse(const Dtmc& p, const Measure& pi, bool certify, double tol) {
  const auto& m = p.probs();
  if (pi.size() != m.size()) throw Error(ErrorCode::DimensionMismatch, "measure and chain sizes differ");
  if (certify && dtmc_stationary_residual(p, pi) > tol * std::max(1.0, pi.total())) {
    throw Error(ErrorCode::NotStationary, "reference measure is not stationary for p");
  }
  std::vector<Triplet> out;
  out.reserve(m.nnz());
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto rows = m.col_rows(i);
    auto vals = m.col_values(i);
    if (pi[i] == 0.0) {
      if (!rows.empty()) {
        throw Error(ErrorCode::UnsupportedState,
                    "state " + format_state(m.space().state(i)) + " has zero weight but incoming probability");
      }
      continue;
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out.push_back({i, rows[k], pi[rows[k]] * vals[k] / pi[i]});
    }
  }
  return Dtmc::unchecked(RateMatrix(m.space_ptr(), out));
}

}  // namespace qrev
