#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qrev/rate_matrix.hpp"

namespace qrev {

inline constexpr double kBalanceTol = 1e-12;
inline constexpr double kIterativeTol = 1e-9;
inline constexpr std::size_t kDirectSolveLimit = 200'000;

/// a(x) = sum_{x'} q(x, x'), self-loops included.
std::vector<double> exit_rates(const RateMatrix& q);

/// Strong connectivity of the positive-rate graph, self-loops ignored.
bool is_irreducible(const RateMatrix& q);

enum class SolveMethod { Auto, Direct, Power };

struct SolverOptions {
  SolveMethod method = SolveMethod::Auto;
  double tol = kBalanceTol;          // residual bound for the direct solve, scaled by max(1, max rate)
  double iter_tol = kIterativeTol;   // max-norm change between power iterations
  std::size_t max_iter = 5'000'000;
};

struct StationarySolve {
  Measure pi;
  double residual = 0.0;   // max_j |a(j) pi(j) - sum_i pi(i) q(i,j)|
  SolveMethod method = SolveMethod::Direct;
  std::size_t iterations = 0;
};

/// Solves a(j) pi(j) = sum_i pi(i) q(i,j) with sum pi = 1.
/// Throws NotIrreducible, or SolverDidNotConverge in power-iteration mode.
StationarySolve solve_stationary(const RateMatrix& q, const SolverOptions& opts = {});
Measure stationary_distribution(const RateMatrix& q, const SolverOptions& opts = {});

/// Max-norm residual of the global balance equation for arbitrary weights.
double stationary_residual(const RateMatrix& q, const Measure& pi);

/// Discrete-time chain with a row-stochastic transition matrix.
class Dtmc {
 public:
  /// Validates entries in [0,1] and unit row sums within `tol`.
  explicit Dtmc(RateMatrix probs, double tol = 1e-9);

  /// Skips the stochasticity checks; used for reversals under a measure that
  /// is not stationary.
  static Dtmc unchecked(RateMatrix probs);

  const RateMatrix& probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return probs_(i, j); }
  double row_defect() const;

 private:
  Dtmc() = default;
  RateMatrix probs_;
};

/// max_j | pi(j) - sum_i pi(i) p(i,j) |
double dtmc_stationary_residual(const Dtmc& p, const Measure& pi);

/// p~(i,j) = pi(j) p(j,i) / pi(i). Throws UnsupportedState when pi(i) = 0 but
/// state i has incoming probability. With `certify`, also throws NotStationary
/// if pi does not satisfy pi = pi p within `tol`.
Dtmc dtmc_reverse(const Dtmc& p, const Measure& pi, bool certify = false, double tol = 1e-9);

}  // namespace qrev
