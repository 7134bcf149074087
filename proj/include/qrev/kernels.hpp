#pragma once

// Data-parallel inner loops used by the solvers and checkers.
//
// Every kernel has a serial reference implementation and an OpenMP version
// with identical results (gathers are bitwise equal; reductions over max are
// exact, reductions over sums agree to rounding). The unqualified entry points
// dispatch on problem size.

#include <cstddef>
#include <span>
#include <vector>

#include "qrev/rate_matrix.hpp"

namespace qrev::kernels {

inline constexpr std::size_t kParallelThreshold = 4096;

namespace serial {
std::vector<double> row_sums(const RateMatrix& q);
/// inflow[j] = sum_{i != j} w[i] q(i, j)
std::vector<double> offdiag_inflow(const RateMatrix& q, std::span<const double> w);
/// max_j | a'(j) w(j) - sum_{i != j} w(i) q(i,j) |, with a' the exit rate
/// without self-loops. Equal to the residual of the global balance equation
/// because self-loops appear on both sides.
double balance_residual(const RateMatrix& q, std::span<const double> w);
/// One step of the uniformized chain: w + (w Q) / lambda.
void uniformized_step(const RateMatrix& q, std::span<const double> offdiag_exit,
                      double lambda, std::span<const double> in, std::span<double> out);
double l1_distance(std::span<const double> a, std::span<const double> b);
double max_abs_distance(std::span<const double> a, std::span<const double> b);
}  // namespace serial

namespace parallel {
std::vector<double> row_sums(const RateMatrix& q);
std::vector<double> offdiag_inflow(const RateMatrix& q, std::span<const double> w);
double balance_residual(const RateMatrix& q, std::span<const double> w);
void uniformized_step(const RateMatrix& q, std::span<const double> offdiag_exit,
                      double lambda, std::span<const double> in, std::span<double> out);
double l1_distance(std::span<const double> a, std::span<const double> b);
double max_abs_distance(std::span<const double> a, std::span<const double> b);
}  // namespace parallel

std::vector<double> row_sums(const RateMatrix& q);
std::vector<double> offdiag_inflow(const RateMatrix& q, std::span<const double> w);
double balance_residual(const RateMatrix& q, std::span<const double> w);
void uniformized_step(const RateMatrix& q, std::span<const double> offdiag_exit,
                      double lambda, std::span<const double> in, std::span<double> out);
double l1_distance(std::span<const double> a, std::span<const double> b);
double max_abs_distance(std::span<const double> a, std::span<const double> b);

/// Exit rates without self-loops.
std::vector<double> offdiag_exit_rates(const RateMatrix& q);

}  // namespace qrev::kernels
