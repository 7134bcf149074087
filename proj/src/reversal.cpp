#include "qrev/reversal.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "qrev/error.hpp"
#include "qrev/kernels.hpp"

namespace qrev {

namespace {

double scaled_gap(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

void require_same(const RateMatrix& q, const Measure& pi) {
  if (q.size() != pi.size()) throw Error(ErrorCode::DimensionMismatch, "measure and rate matrix sizes differ");
}

}  // namespace

RateMatrix reverse(const RateMatrix& q, const Measure& pi) {
  require_same(q, pi);
  std::vector<Triplet> out;
  out.reserve(q.nnz());
  for (std::size_t x = 0; x < q.size(); ++x) {
    if (pi[x] == 0.0) continue;
    auto rows = q.col_rows(x);
    auto vals = q.col_values(x);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out.push_back({x, rows[k], pi[rows[k]] * vals[k] / pi[x]});
    }
  }
  return RateMatrix(q.space_ptr(), out);
}

const char* to_string(KellyVerdict v) {
  switch (v) {
    case KellyVerdict::Pass: return "pass";
    case KellyVerdict::FailBalance: return "fail_balance";
    case KellyVerdict::FailRateConservation: return "fail_rate_conservation";
  }
  return "unknown";
}

KellyReport kelly_check(const RateMatrix& q, const RateMatrix& q_tilde, const Measure& pi, double tol) {
  require_same(q, pi);
  if (q_tilde.size() != q.size()) throw Error(ErrorCode::DimensionMismatch, "q and q~ sizes differ");
  KellyReport r;
  // pi(i) q~(i,j) against pi(j) q(j,i) over the union of both supports.
  for (std::size_t i = 0; i < q.size(); ++i) {
    auto cols = q_tilde.row_cols(i);
    auto vals = q_tilde.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      r.balance_residual = std::max(r.balance_residual, scaled_gap(pi[i] * vals[k], pi[cols[k]] * q(cols[k], i)));
    }
    auto rows = q.col_rows(i);
    auto qv = q.col_values(i);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      r.balance_residual = std::max(r.balance_residual, scaled_gap(pi[i] * q_tilde(i, rows[k]), pi[rows[k]] * qv[k]));
    }
  }
  const auto a = kernels::row_sums(q);
  const auto at = kernels::row_sums(q_tilde);
  for (std::size_t i = 0; i < q.size(); ++i) {
    r.conservation_residual = std::max(r.conservation_residual, scaled_gap(pi[i] * a[i], pi[i] * at[i]));
  }
  if (r.balance_residual > tol) {
    r.verdict = KellyVerdict::FailBalance;
  } else if (r.conservation_residual > tol) {
    r.verdict = KellyVerdict::FailRateConservation;
  }
  return r;
}

double detailed_balance_residual(const RateMatrix& q, const Measure& pi) {
  require_same(q, pi);
  double worst = 0.0;
  for (std::size_t x = 0; x < q.size(); ++x) {
    auto cols = q.row_cols(x);
    auto vals = q.row_values(x);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const std::size_t y = cols[k];
      if (y == x) continue;
      worst = std::max(worst, scaled_gap(pi[x] * vals[k], pi[y] * q(y, x)));
    }
  }
  return worst;
}

bool is_reversible(const RateMatrix& q, const Measure& pi, double tol) {
  return detailed_balance_residual(q, pi) <= tol;
}

Measure birth_death_measure(const RateMatrix& q) {
  const auto& space = q.space();
  if (space.dimension() != 1) throw Error(ErrorCode::NotBirthDeath, "birth-death chains are one-dimensional");
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (space.state(i)[0] != space.state(0)[0] + static_cast<int>(i)) {
      throw Error(ErrorCode::NotBirthDeath, "states are not consecutive integers");
    }
  }
  for (std::size_t x = 0; x < q.size(); ++x) {
    for (std::size_t y : q.row_cols(x)) {
      const auto d = static_cast<long>(y) - static_cast<long>(x);
      if (d != 0 && d != 1 && d != -1) {
        throw Error(ErrorCode::NotBirthDeath, "positive rate from " + format_state(space.state(x)) + " to " +
                                                  format_state(space.state(y)));
      }
    }
  }
  std::vector<double> w(q.size());
  w[0] = 1.0;
  for (std::size_t x = 1; x < q.size(); ++x) {
    const double down = q(x, x - 1);
    if (down <= 0.0) {
      throw Error(ErrorCode::ZeroDownRate, "zero down rate at " + format_state(space.state(x)));
    }
    w[x] = w[x - 1] * q(x - 1, x) / down;
  }
  return Measure(q.space_ptr(), std::move(w));
}

ReversibleMeasureResult reversible_measure(const RateMatrix& q, std::size_t base, double tol) {
  const std::size_t n = q.size();
  if (base >= n) throw Error(ErrorCode::InvalidArgument, "base index out of range");
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> parent(n, none), depth(n, 0);
  std::vector<double> w(n, 0.0);
  std::vector<char> seen(n, 0);
  seen[base] = 1;
  w[base] = 1.0;
  std::deque<std::size_t> frontier{base};
  while (!frontier.empty()) {
    const std::size_t x = frontier.front();
    frontier.pop_front();
    auto cols = q.row_cols(x);
    auto vals = q.row_values(x);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const std::size_t y = cols[k];
      if (seen[y]) continue;
      const double back = q(y, x);
      if (back <= 0.0) continue;
      seen[y] = 1;
      parent[y] = x;
      depth[y] = depth[x] + 1;
      w[y] = w[x] * vals[k] / back;
      frontier.push_back(y);
    }
  }

  auto witness = [&](std::size_t x, std::size_t y) {
    std::vector<std::size_t> up_x{x}, up_y{y};
    while (depth[up_x.back()] > depth[up_y.back()]) up_x.push_back(parent[up_x.back()]);
    while (depth[up_y.back()] > depth[up_x.back()]) up_y.push_back(parent[up_y.back()]);
    while (up_x.back() != up_y.back()) {
      up_x.push_back(parent[up_x.back()]);
      up_y.push_back(parent[up_y.back()]);
    }
    // lca -> ... -> x -> y -> ... -> (child of lca)
    std::vector<std::size_t> cycle(up_x.rbegin(), up_x.rend());
    for (std::size_t k = 0; k + 1 < up_y.size(); ++k) cycle.push_back(up_y[k]);
    return cycle;
  };

  ReversibleMeasureResult out;
  for (std::size_t x = 0; x < n; ++x) {
    auto cols = q.row_cols(x);
    auto vals = q.row_values(x);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const std::size_t y = cols[k];
      if (y == x) continue;
      const double back = q(y, x);
      if (back <= 0.0) {
        out.cycle = {x, y};
        out.inconsistency = std::numeric_limits<double>::infinity();
        return out;
      }
      if (!seen[x] || !seen[y]) continue;
      const double fwd = w[x] * vals[k];
      const double bwd = w[y] * back;
      const double gap = std::abs(fwd - bwd) / std::max(fwd, bwd);
      if (gap > tol) {
        out.cycle = witness(x, y);
        out.inconsistency = gap;
        return out;
      }
    }
  }
  for (std::size_t x = 0; x < n; ++x) {
    if (!seen[x]) {
      throw Error(ErrorCode::UnreachableState,
                  "state " + format_state(q.space().state(x)) + " is not reachable from the base state");
    }
  }
  out.measure = Measure(q.space_ptr(), std::move(w));
  return out;
}

}  // namespace qrev
