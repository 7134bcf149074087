#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "qrev/rate_matrix.hpp"

namespace qrev {

/// q~(x,x') = pi(x') q(x',x) / pi(x), and 0 on rows with pi(x) = 0.
RateMatrix reverse(const RateMatrix& q, const Measure& pi);

enum class KellyVerdict { Pass, FailBalance, FailRateConservation };

const char* to_string(KellyVerdict v);

struct KellyReport {
  KellyVerdict verdict = KellyVerdict::Pass;
  double balance_residual = 0.0;       // cross-balance pi(i) q~(i,j) = pi(j) q(j,i), scaled
  double conservation_residual = 0.0;  // pi(i) times the row sums of q~ and of q, scaled
  bool pass() const { return verdict == KellyVerdict::Pass; }
};

/// Kelly's lemma. Both identities are compared on the flow scale, with
/// |lhs - rhs| <= tol * max(1, |lhs|, |rhs|); rate conservation is weighted by pi(i)
/// so round-off in far-tail states with pi ~ 1e-20 does not decide the verdict.
/// A pass certifies that pi (normalized) is the stationary distribution of q.
KellyReport kelly_check(const RateMatrix& q, const RateMatrix& q_tilde, const Measure& pi,
                        double tol = 1e-12);

/// max over pairs of |pi(x) q(x,x') - pi(x') q(x',x)| / max(1, both sides).
double detailed_balance_residual(const RateMatrix& q, const Measure& pi);
bool is_reversible(const RateMatrix& q, const Measure& pi, double tol = 1e-12);

/// Product of up rates over product of down rates, with pi(0) = 1. The space
/// must be one-dimensional with consecutive states; self-loops are allowed.
Measure birth_death_measure(const RateMatrix& q);

struct ReversibleMeasureResult {
  std::optional<Measure> measure;
  /// Set when q is not reversible: the states of a closed walk along which the
  /// rate products disagree; the walk returns from the last entry to cycle[0].
  std::vector<std::size_t> cycle;
  double inconsistency = 0.0;
  bool consistent() const { return measure.has_value(); }
};

/// Path-product construction from `base` over a breadth-first spanning tree.
/// Throws UnreachableState if some state is not connected to base by pairs
/// with positive rates in both directions and no inconsistency was found.
ReversibleMeasureResult reversible_measure(const RateMatrix& q, std::size_t base = 0,
                                           double tol = 1e-12);

}  // namespace qrev
