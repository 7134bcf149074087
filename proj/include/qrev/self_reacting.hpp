#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qrev/models.hpp"

namespace qrev {

using RoutingMatrix = std::vector<std::vector<double>>;

/// Closed system in which released entities are routed and re-inserted at once.
struct SelfReactingSpec {
  SpacePtr space;
  std::vector<std::string> types;
  std::vector<RateMatrix> release;  // release[u](x, y) = q_du(x, y)
  std::vector<RoutingMatrix> routing;  // routing[y][u][u'] = r(u, y, u')
  std::vector<RateMatrix> arrival;  // arrival[u'](y, x') = p_au'(y, x'); dropped mass counts toward the row sum
  RateMatrix internal;

  /// Throws RoutingNotStochastic, KernelNotStochastic or DimensionMismatch.
  void validate(double tol = 1e-9) const;
};

struct SelfReactingModel {
  QueueModel model;
  SelfReactingSpec spec;
};

std::string triple_label(const std::string& u, const State& y, const std::string& u2);

/// q = sum_{u,y,u'} q_du(x,y) r(u,y,u') p_au'(y,x') + q_I, one family part per
/// triple (u,y,u') and gamma((u,y,u')) = (u',y,u). Composite transitions whose
/// arrival leaves the truncation are dropped and recorded as leaked mass.
SelfReactingModel build_self_reacting(SelfReactingSpec spec);

struct RoutingInvariant {
  std::vector<double> nu;  // sums to one
  bool positive = true;    // nu > 0 on every type that receives routed mass
  std::string warning;
};

/// Invariant measure of a stochastic matrix. Each closed class receives its own
/// stationary vector; classes share the total mass equally. Transient types
/// get zero, which breaks positivity if they receive mass.
RoutingInvariant routing_invariant(const RoutingMatrix& r, double tol = 1e-12);
/// Throws NoPositiveSolution instead of returning a warning.
std::vector<double> positive_routing_invariant(const RoutingMatrix& r, double tol = 1e-12);

/// r~(u', u) = nu(u) r(u, u') / nu(u'). Types with nu(u') = 0 and no inflow get
/// an identity row; nu(u') = 0 with inflow throws ZeroWeightType.
RoutingMatrix reversed_routing(const RoutingMatrix& r, const std::vector<double>& nu);

/// q_d(x, y, u) = nu(u, y) / Phi(x) on the graph x = release_map(y, u).
/// nu is indexed [y][u]. Returns one release matrix per type. Throws ZeroPhi.
std::vector<RateMatrix> balanced_departure_rates(
    const SpacePtr& space, const std::vector<double>& phi, const std::vector<std::vector<double>>& nu,
    const std::function<std::optional<std::size_t>(std::size_t, std::size_t)>& release_map);

struct SelfReactingStationary {
  Measure pi;
  double internal_residual = 0.0;  // detailed balance of q_I under Phi
  double arrival_residual = 0.0;  // Phi(x)(a(x) - b(x)) against the routed inflow, scaled by its total
};

/// Normalized Phi after checking that q_I is self-dual under Phi with b < a
/// (InternalBalanceViolated) and that Phi(x)(a(x) - b(x)) equals the routed inflow
/// sum_y sum_{u,u'} nu(u,y) r(u,y,u') p_au'(y,x) with nu(u,y) = sum_x Phi(x) q_du(x,y)
/// (ArrivalConsistencyFailed).
SelfReactingStationary self_reacting_stationary(const SelfReactingModel& m, const std::vector<double>& phi,
                                                double tol = 1e-9);

/// Batch movement network on n nodes. Type u = (u_0, ..., u_n) releases u^+ =
/// (u_1, ..., u_n) customers and re-inserts the routed type's u'^+. Release
/// rates default to Psi(y) nu(u, y) / Phi(x) on y = x - u^+, with nu the
/// normalized invariant of r(., y, .). A routed batch that would leave the
/// truncation is sent back to its own type, so the composite move is a self-loop.
struct BatchMovementParams {
  int nodes = 0;
  std::vector<std::vector<int>> types;
  std::function<double(std::size_t, const State&, std::size_t)> routing;  // r(u, y, u')
  std::function<double(const State&)> phi;
  std::function<double(const State&)> psi;  // defaults to 1
  bool weight_by_nu = true;
  /// Replaces the balanced release rate q_d(x, x - u^+, u) when set.
  std::function<double(const State&, std::size_t)> release_override;
  std::vector<int> bounds;
  std::optional<int> population;  // closed network: coordinate sum fixed
};

SelfReactingModel build_batch_movement_network(const BatchMovementParams& params);

/// Unit batches e_0..e_n with routing r(e_i, e_j) = w_j / (1 + sum w) (w_0 = 1),
/// release rates Psi(x - u^+) / Phi(x) and closed form C Phi(x) prod w_i^{x_i}.
SelfReactingModel build_whittle(int nodes, const std::function<double(const State&)>& phi,
                                const std::function<double(const State&)>& psi, const std::vector<double>& w,
                                const std::vector<int>& bounds);

/// Single-server Jackson network written as a unit-batch movement network.
/// lambda[j] is the external rate into node j+1, mu[i] the service rate of node i+1,
/// p[i][j] the routing probability from node i+1 to node j+1.
BatchMovementParams jackson_batch_movement(const std::vector<double>& lambda, const std::vector<double>& mu,
                                           const RoutingMatrix& p, const std::vector<int>& bounds);

struct RoutingReversalReport {
  double departure_residual = 0.0;  // |beta - beta~| / sum beta
  double invariance_residual = 0.0; // nu r~ against nu
  double reversal_gap = 0.0;        // r~ from beta against reversed_routing(r, nu)
  bool departure_holds = false;     // released flow solves the traffic equation
  bool reversed_invariant = false;  // r~ keeps the routing invariant nu
  bool equivalent() const { return departure_holds == reversed_invariant; }
};

/// beta(u,y) = sum_x pi(x) q_du(x,y), beta~(u',y) = sum_u beta(u,y) r(u,y,u'),
/// r~(u',y,u) = beta(u,y) r(u,y,u') / beta~(u',y).
RoutingReversalReport check_routing_reversal(const SelfReactingModel& m, const Measure& pi, double tol = 1e-10);

}  // namespace qrev
