#include "qrev/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace qrev::kernels {

namespace {

inline double row_sum(const RateMatrix& q, std::size_t i) {
  double s = 0.0;
  for (double v : q.row_values(i)) s += v;
  return s;
}

inline double inflow_at(const RateMatrix& q, std::span<const double> w, std::size_t j) {
  auto rows = q.col_rows(j);
  auto vals = q.col_values(j);
  double s = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] != j) s += w[rows[k]] * vals[k];
  }
  return s;
}

inline double offdiag_exit_at(const RateMatrix& q, std::size_t i) {
  auto cols = q.row_cols(i);
  auto vals = q.row_values(i);
  double s = 0.0;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (cols[k] != i) s += vals[k];
  }
  return s;
}

}  // namespace

namespace serial {

std::vector<double> row_sums(const RateMatrix& q) {
  std::vector<double> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = row_sum(q, i);
  return out;
}

std::vector<double> offdiag_inflow(const RateMatrix& q, std::span<const double> w) {
  std::vector<double> out(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) out[j] = inflow_at(q, w, j);
  return out;
}

double balance_residual(const RateMatrix& q, std::span<const double> w) {
  double worst = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    worst = std::max(worst, std::abs(offdiag_exit_at(q, j) * w[j] - inflow_at(q, w, j)));
  }
  return worst;
}

void uniformized_step(const RateMatrix& q, std::span<const double> offdiag_exit, double lambda,
                      std::span<const double> in, std::span<double> out) {
  for (std::size_t j = 0; j < q.size(); ++j) {
    out[j] = in[j] + (inflow_at(q, in, j) - offdiag_exit[j] * in[j]) / lambda;
  }
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

double max_abs_distance(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace serial

namespace parallel {

std::vector<double> row_sums(const RateMatrix& q) {
  std::vector<double> out(q.size());
  const auto n = static_cast<std::ptrdiff_t>(q.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = row_sum(q, static_cast<std::size_t>(i));
  return out;
}

std::vector<double> offdiag_inflow(const RateMatrix& q, std::span<const double> w) {
  std::vector<double> out(q.size());
  const auto n = static_cast<std::ptrdiff_t>(q.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) out[j] = inflow_at(q, w, static_cast<std::size_t>(j));
  return out;
}

double balance_residual(const RateMatrix& q, std::span<const double> w) {
  double worst = 0.0;
  const auto n = static_cast<std::ptrdiff_t>(q.size());
#pragma omp parallel for schedule(static) reduction(max : worst)
  for (std::ptrdiff_t jj = 0; jj < n; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    worst = std::max(worst, std::abs(offdiag_exit_at(q, j) * w[j] - inflow_at(q, w, j)));
  }
  return worst;
}

void uniformized_step(const RateMatrix& q, std::span<const double> offdiag_exit, double lambda,
                      std::span<const double> in, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(q.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t jj = 0; jj < n; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    out[j] = in[j] + (inflow_at(q, in, j) - offdiag_exit[j] * in[j]) / lambda;
  }
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  const auto n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for schedule(static) reduction(+ : s)
  for (std::ptrdiff_t i = 0; i < n; ++i) s += std::abs(a[i] - b[i]);
  return s;
}

double max_abs_distance(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  const auto n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for schedule(static) reduction(max : m)
  for (std::ptrdiff_t i = 0; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace parallel

std::vector<double> row_sums(const RateMatrix& q) {
  return q.size() >= kParallelThreshold ? parallel::row_sums(q) : serial::row_sums(q);
}

std::vector<double> offdiag_inflow(const RateMatrix& q, std::span<const double> w) {
  return q.size() >= kParallelThreshold ? parallel::offdiag_inflow(q, w)
                                        : serial::offdiag_inflow(q, w);
}

double balance_residual(const RateMatrix& q, std::span<const double> w) {
  return q.size() >= kParallelThreshold ? parallel::balance_residual(q, w)
                                        : serial::balance_residual(q, w);
}

void uniformized_step(const RateMatrix& q, std::span<const double> offdiag_exit, double lambda,
                      std::span<const double> in, std::span<double> out) {
  if (q.size() >= kParallelThreshold) {
    parallel::uniformized_step(q, offdiag_exit, lambda, in, out);
  } else {
    serial::uniformized_step(q, offdiag_exit, lambda, in, out);
  }
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  return a.size() >= kParallelThreshold ? parallel::l1_distance(a, b) : serial::l1_distance(a, b);
}

double max_abs_distance(std::span<const double> a, std::span<const double> b) {
  return a.size() >= kParallelThreshold ? parallel::max_abs_distance(a, b)
                                        : serial::max_abs_distance(a, b);
}

std::vector<double> offdiag_exit_rates(const RateMatrix& q) {
  std::vector<double> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = offdiag_exit_at(q, i);
  return out;
}

}  // namespace qrev::kernels
