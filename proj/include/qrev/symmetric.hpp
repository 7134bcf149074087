#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "qrev/models.hpp"

namespace qrev {

/// Position-based service discipline for a multi-type queue with staged service.
///
/// Positions are 1-based. gamma(l, n) is the share of capacity given to
/// position l when n customers are present; delta(l, n) is the probability
/// that an arrival finding n - 1 customers takes position l.
struct SymmetricQueueParams {
  std::vector<double> alpha;             // arrival rate per type
  std::vector<std::vector<double>> eta;  // eta[u][j-1]: completion rate of stage j; k_u = eta[u].size()
  std::function<double(int, int)> gamma;
  std::function<double(int, int)> delta;
  std::string discipline = "custom";

  std::size_t type_count() const { return alpha.size(); }
  int stages(std::size_t u) const { return static_cast<int>(eta[u].size()); }
  double phi(int n) const;
};

SymmetricQueueParams processor_sharing(std::vector<double> alpha, std::vector<std::vector<double>> eta);
SymmetricQueueParams preemptive_lcfs(std::vector<double> alpha, std::vector<std::vector<double>> eta);
SymmetricQueueParams fcfs(std::vector<double> alpha, std::vector<std::vector<double>> eta);

/// Stage rates of a k-stage Erlang service time with the given mean: every stage has rate k / mean.
std::vector<double> erlang_stages(int k, double mean);

/// phi(n) delta(l, n) = gamma(l, n) for 1 <= l <= n <= n_max.
bool check_symmetric(const SymmetricQueueParams& params, int n_max, double tol = 1e-12);

inline constexpr std::size_t kMaxSymmetricStates = 200'000;

/// State coordinates: [n, u_1, w_1, ..., u_n, w_n, 0, ...] of length 1 + 2 n_max,
/// types 0-based, stages 1..k_u. Arrivals at n_max are blocked.
ReactingSystemSpec symmetric_reacting_spec(const SymmetricQueueParams& params, int n_max);

/// Throws SymmetryViolated or StateSpaceTooLarge.
QueueModel build_symmetric_queue(const SymmetricQueueParams& params, int n_max);

/// c^{-1} prod_l alpha_{u_l} / (phi(l) eta_{u_l w_l}) on the space of `model`.
Measure symmetric_closed_form(const SymmetricQueueParams& params, const SpacePtr& space);

}  // namespace qrev
