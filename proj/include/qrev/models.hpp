#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qrev/balance.hpp"
#include "qrev/rate_matrix.hpp"

namespace qrev {

/// A built chain with its labeled family and, when known, its closed-form
/// stationary measure (normalized when normalizable on the truncation).
struct QueueModel {
  std::string name;
  SpacePtr space;
  RateMatrix q;
  SubTransitionFamily family;
  std::optional<Measure> closed_form_pi;
  std::map<std::string, double> params;
  /// Customer types; departure parts are labeled departure_label(type).
  std::vector<std::string> types;

  std::map<std::string, RateMatrix> departures_by_type() const;
  std::map<std::string, RateMatrix> arrivals_by_type() const;
  /// Sum of all departure parts.
  RateMatrix total_departures() const;
};

std::string arrival_label(const std::string& type);
std::string departure_label(const std::string& type);

/// Queue without its exogenous arrivals: per-type arrival kernels p_au
/// (row-stochastic once each row's dropped mass is counted as a blocked
/// arrival), per-type departure rates q_du and internal rates q_I.
struct ReactingSystemSpec {
  SpacePtr space;
  std::vector<std::string> types;
  std::vector<RateMatrix> arrival_kernels;
  std::vector<RateMatrix> departure_rates;
  RateMatrix internal;

  /// Throws KernelNotStochastic or DimensionMismatch.
  void validate(double tol = 1e-9) const;
};

/// alpha_u p_au, with blocked mass realized as a self-loop of rate alpha_u * dropped(x).
RateMatrix arrival_part(const RateMatrix& kernel, double alpha);

/// q = sum_u (alpha_u p_au + q_du) + q_I with labels a:u, d:u and gamma swapping them.
/// A single type named "" yields the labels "a" and "d".
QueueModel build_reacting_system(const ReactingSystemSpec& spec, const std::vector<double>& alpha);

/// Restriction of `m` to the states reachable from `start`; the reachable set
/// is closed under q, so the parts and closed form carry over unchanged.
QueueModel restrict_to_reachable(const QueueModel& m, const State& start);

/// up[x] is the rate x -> x+1 for x < N = up.size(), down[x] the rate x+1 -> x.
/// `boundary_up` > 0 adds a blocked-arrival self-loop at N and records it as leaked mass.
QueueModel build_birth_death(const std::vector<double>& up, const std::vector<double>& down,
                             double boundary_up = 0.0);

ReactingSystemSpec mm1_reacting_spec(double mu, int bound);
ReactingSystemSpec mms_reacting_spec(double mu, int servers, int bound);
QueueModel build_mm1(double lambda, double mu, int bound);
QueueModel build_mms(double lambda, double mu, int servers, int bound);

enum class BatchCounting { All, FullBatches };

/// Service completions at rate mu remove min(b, x) customers, b ~ batch_dist
/// on {1, ..., B} (batch_dist[b-1] = P(b)). With FullBatches only completions
/// with b <= x are departures; the others become internal transitions.
ReactingSystemSpec batch_service_reacting_spec(double mu, const std::vector<double>& batch_dist,
                                               BatchCounting counting, int bound);
QueueModel build_batch_service_queue(double lambda, double mu, const std::vector<double>& batch_dist,
                                     BatchCounting counting, int bound);

}  // namespace qrev
