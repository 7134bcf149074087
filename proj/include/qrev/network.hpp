#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "qrev/ctmc.hpp"
#include "qrev/models.hpp"

namespace qrev {

/// A network node. Node 0 is the external source: a singleton state space
/// whose departures are self-loops at the exogenous rate and whose arrivals
/// leave its state unchanged.
struct NodeSpec {
  std::string name;
  ReactingSystemSpec spec;
  bool source = false;
};

NodeSpec source_node(const std::vector<std::string>& types, const std::vector<double>& rates);

/// r(i u, j v): a type-u departure of node i becomes a type-v arrival at node j.
class RoutingKernel {
 public:
  using Key = std::array<std::size_t, 4>;

  void set(std::size_t i, std::size_t u, std::size_t j, std::size_t v, double p);
  double operator()(std::size_t i, std::size_t u, std::size_t j, std::size_t v) const;
  const std::map<Key, double>& probs() const { return probs_; }

 private:
  std::map<Key, double> probs_;
};

struct Network {
  std::vector<NodeSpec> nodes;
  RoutingKernel routing;

  /// Throws InvalidArgument (source missing or repeated), BadRouting (unknown
  /// node or type, negative entry) and RoutingNotStochastic.
  void validate(double tol = 1e-9) const;
  std::size_t type_count(std::size_t node) const { return nodes.at(node).spec.types.size(); }
};

/// Single-node generator under the given per-type arrival rates.
RateMatrix node_in_isolation(const NodeSpec& node, const std::vector<double>& alpha);
QueueModel node_model(const NodeSpec& node, const std::vector<double>& alpha);

struct TrafficOptions {
  double damping = 0.5;
  double change_tol = 1e-15;  // max relative change of alpha between sweeps
  double tol = 1e-9;          // quasi-reversibility fits and traffic residual
  int max_iter = 20000;
  /// Throw NodeNotQuasiReversible on the first failing node; otherwise record
  /// the failure and keep the least-squares departure rates.
  bool strict = true;
};

struct NodeFailure {
  std::size_t node = 0;
  std::string type;
  double residual = 0.0;
};

struct TrafficSolution {
  std::vector<std::vector<double>> alpha;  // [node][type]
  std::vector<std::vector<double>> beta;
  std::vector<Measure> node_pis;
  bool converged = false;
  double residual = 0.0;  // max |alpha - routed beta| / max alpha
  int iterations = 0;
  std::vector<NodeFailure> failures;
};

TrafficSolution solve_traffic(const Network& net, const TrafficOptions& opts = {});

constexpr std::size_t kMaxProductStates = 2000000;

/// Product of the node spaces other than the source, node 1 most significant.
SpacePtr product_space(const Network& net);

/// Routing-composed departure/arrival rates plus each node's internal rates.
/// A composite move whose arrival is blocked is dropped and counted as leak.
RateMatrix joint_generator(const Network& net);

/// pi(x) = prod_i pi_i(x_i) on product_space(net).
Measure product_form_distribution(const Network& net, const TrafficSolution& traffic);

struct ProductFormReport {
  TrafficSolution traffic;
  Measure product;
  Measure joint;
  double tv_distance = 0.0;
  double residual = 0.0;  // stationary residual of the product measure under the joint generator
  double leak = 0.0;      // sum_x pi(x) dropped(x) under the product measure
  bool pass = false;      // tv_distance <= tol + leak and the traffic solve converged cleanly
};

ProductFormReport verify_product_form(const Network& net, double tol = 1e-6, TrafficOptions opts = {});

/// Node pieces reversed under pi_i: departures from the reversed arrival parts,
/// arrival kernels from the reversed departures scaled by 1 / beta, routing
/// r~(i u, j v) = beta_jv r(j v, i u) / alpha_iu.
Network reversed_network(const Network& net, const TrafficSolution& traffic);

/// Joint states where no node sits on a state with leaked mass.
StateMask joint_interior(const Network& net);

/// Jackson network: source rates lambda, per-node service rate mu and server
/// count s, substochastic P with the defect routed to node 0. Every node has a
/// single unnamed type.
Network build_jackson(const std::vector<double>& lambda, const std::vector<double>& mu, const std::vector<int>& servers,
                      const std::vector<std::vector<double>>& p, const std::vector<int>& bounds);

}  // namespace qrev
