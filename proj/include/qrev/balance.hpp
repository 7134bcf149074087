#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qrev/rate_matrix.hpp"

namespace qrev {

using StatePair = std::pair<std::size_t, std::size_t>;

/// Disjoint blocks of ordered pairs of state indices.
struct PairPartition {
  std::vector<std::vector<StatePair>> blocks;

  static PairPartition singletons(const RateMatrix& q);
  static PairPartition whole(const RateMatrix& q);
};

struct BlockVerdict {
  double outflow = 0.0;  // sum over the block of pi(x) q(x,x')
  double inflow = 0.0;   // sum over the block of pi(x') q(x',x)
  double residual = 0.0;
  bool pass = false;
};

struct LocalBalanceReport {
  std::vector<BlockVerdict> blocks;
  double stationary_residual = 0.0;
  bool pi_stationary = true;  // false means the caller's stationarity claim did not hold
  bool all_pass() const;
};

/// Throws OverlappingBlocks if a pair appears in more than one block.
LocalBalanceReport check_local_balance(const RateMatrix& q, const Measure& pi, const PairPartition& w,
                                       double tol = 1e-12);

using TestFunction = std::function<double(std::size_t, std::size_t)>;

struct TestFunctionSet {
  std::vector<TestFunction> functions;
};

TestFunction block_indicator(const std::vector<StatePair>& block);

/// Throws NegativeFunctionValue when some f is negative on the support of q or its transpose.
LocalBalanceReport check_test_function_balance(const RateMatrix& q, const Measure& pi, const TestFunctionSet& g,
                                               double tol = 1e-12);

/// Labeled parts q_u of a parent generator with a permutation gamma of the labels.
class SubTransitionFamily {
 public:
  SubTransitionFamily() = default;
  /// `gamma` maps each label to its image; labels missing from it map to themselves.
  SubTransitionFamily(RateMatrix parent, std::vector<std::string> labels, std::vector<RateMatrix> parts,
                      const std::map<std::string, std::string>& gamma = {});

  const RateMatrix& parent() const noexcept { return parent_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<RateMatrix>& parts() const noexcept { return parts_; }
  std::size_t label_count() const noexcept { return labels_.size(); }

  std::optional<std::size_t> find(const std::string& label) const;
  std::size_t require(const std::string& label) const;
  const RateMatrix& part(const std::string& label) const { return parts_[require(label)]; }
  std::size_t gamma(std::size_t u) const { return gamma_[u]; }
  std::size_t gamma_inverse(std::size_t u) const { return gamma_inv_[u]; }
  const std::string& gamma(const std::string& label) const { return labels_[gamma_[require(label)]]; }

  /// Parent minus the sum of the parts, clipped at zero.
  RateMatrix unlabeled(double tol = 1e-12) const;
  /// Orbits of gamma; each is closed under gamma and together they cover the labels.
  std::vector<std::vector<std::string>> orbits() const;

 private:
  RateMatrix parent_;
  std::vector<std::string> labels_;
  std::vector<RateMatrix> parts_;
  std::vector<std::size_t> gamma_;
  std::vector<std::size_t> gamma_inv_;
};

struct FamilyVerdict {
  bool pass = true;
  double worst_excess = 0.0;  // max of sum_u q_u - q, scaled by max(1, q)
  std::size_t from = 0;
  std::size_t to = 0;
  double min_slack = 0.0;     // total parent mass not covered by any part
};

FamilyVerdict validate_family(const SubTransitionFamily& fam, double tol = 1e-12);

/// q~_u(x,x') = pi(x')/pi(x) q_{gamma^{-1}(u)}(x',x), aligned with fam.labels().
std::vector<RateMatrix> gamma_reverse(const SubTransitionFamily& fam, const Measure& pi);

/// A class of (g, sigma) pairs given by a membership test.
struct MembershipPredicate {
  std::string name;
  std::function<bool(const RateMatrix&, const Measure&, double)> test;
};

/// Scale-free fit of sum_{x'} sigma(x') g(x',x) = c sigma(x). The constant is
/// the least-squares value; the residual is max_x |inflow(x) - c sigma(x)|
/// divided by c * sum sigma. States with sigma(x) = 0 and positive inflow
/// raise ZeroWeightState.
///
/// `boundary` (empty or one flag per state) marks states whose arrivals are
/// blocked by a truncation; they are left out of the fit and the residual,
/// since the departures that would enter them from above were cut off.
struct PoissonFit {
  double rate = 0.0;
  double residual = 0.0;
  bool ok(double tol) const { return rate > 0.0 && residual <= tol; }
};

using StateMask = std::vector<char>;

PoissonFit fit_departure_rate(const RateMatrix& g, const Measure& sigma, const StateMask& boundary = {});
/// Same fit for sigma(x) * row sum of g, i.e. constant row sums on the support of sigma.
PoissonFit fit_arrival_rate(const RateMatrix& g, const Measure& sigma, const StateMask& boundary = {});

/// Constant row sum class.
MembershipPredicate q_a_predicate(StateMask boundary = {});
/// Reversed-inflow class: sum sigma(x') g(x',x) = c sigma(x).
MembershipPredicate q_d_predicate(StateMask boundary = {});
/// Labels starting with 'a' get q_a_predicate, labels starting with 'd' get q_d_predicate.
std::map<std::string, MembershipPredicate> reacting_predicates(const SubTransitionFamily& fam,
                                                               const StateMask& boundary = {});

/// States carrying leaked rate mass in q.
StateMask truncation_boundary(const RateMatrix& q);

struct LabelVerdict {
  std::string label;
  bool has_predicate = false;
  bool member_forward = false;   // preds[u](q_u, pi)
  bool member_reversed = false;  // preds[u](q~_u, pi)
  bool ok = true;                // forward membership implies reversed membership
};

struct GammaReport {
  bool pass = true;
  std::vector<LabelVerdict> labels;
  /// Source labels gamma^{-1}(u) of every failing u; their reversal left the class.
  std::vector<std::string> failed_at;
  std::vector<std::vector<std::string>> orbits;
};

GammaReport check_gamma_reversibility(const SubTransitionFamily& fam, const Measure& pi,
                                      const std::map<std::string, MembershipPredicate>& preds,
                                      double tol = 1e-9);

/// Common row sum when all row sums agree (max/min ratio within 1 + tol).
std::optional<double> poisson_forward(const RateMatrix& q_star, double tol = 1e-9);
/// Rate beta with sum pi(x') q_*(x',x) = beta pi(x) for all x.
std::optional<double> poisson_backward(const RateMatrix& q_star, const Measure& pi, double tol = 1e-9,
                                       const StateMask& boundary = {});

struct QuasiReversibility {
  std::map<std::string, PoissonFit> fits;
  bool holds = false;
};

QuasiReversibility quasi_reversibility(const std::map<std::string, RateMatrix>& q_d_by_type, const Measure& pi,
                                       double tol = 1e-9, const StateMask& boundary = {});
/// Per-type beta when every type passes, otherwise nullopt.
std::optional<std::map<std::string, double>> quasi_reversible(
    const std::map<std::string, RateMatrix>& q_d_by_type, const Measure& pi, double tol = 1e-9,
    const StateMask& boundary = {});

}  // namespace qrev
