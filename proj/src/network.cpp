#include "qrev/network.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <tuple>

#include "qrev/error.hpp"
#include "qrev/kernels.hpp"
#include "qrev/reversal.hpp"

namespace qrev {

namespace {

struct Route {
  std::size_t node;
  std::size_t type;
  double p;
};

// routes[i][u] = all (j, v, r(iu, jv)) with r > 0
std::vector<std::vector<std::vector<Route>>> routes_of(const Network& net) {
  std::vector<std::vector<std::vector<Route>>> out(net.nodes.size());
  for (std::size_t i = 0; i < net.nodes.size(); ++i) out[i].resize(net.type_count(i));
  for (const auto& [k, p] : net.routing.probs()) {
    if (p > 0.0) out[k[0]][k[1]].push_back({k[2], k[3], p});
  }
  return out;
}

std::vector<std::vector<double>> route_flow(const Network& net, const std::vector<std::vector<double>>& beta) {
  std::vector<std::vector<double>> out(net.nodes.size());
  for (std::size_t i = 0; i < net.nodes.size(); ++i) out[i].assign(net.type_count(i), 0.0);
  for (const auto& [k, p] : net.routing.probs()) out[k[2]][k[3]] += beta[k[0]][k[1]] * p;
  return out;
}

double max_entry(const std::vector<std::vector<double>>& a) {
  double m = 0.0;
  for (const auto& row : a) {
    for (double v : row) m = std::max(m, std::abs(v));
  }
  return m;
}

struct NodeSolve {
  Measure pi;
  std::vector<double> beta;
  std::vector<NodeFailure> failures;
};

NodeSolve solve_node(const Network& net, std::size_t i, const std::vector<double>& alpha, double tol) {
  const auto& node = net.nodes[i];
  const auto model = node_model(node, alpha);
  NodeSolve out{stationary_distribution(model.q), {}, {}};
  const auto qr = quasi_reversibility(model.departures_by_type(), out.pi, tol, truncation_boundary(model.q));
  for (const auto& type : node.spec.types) {
    const auto& fit = qr.fits.at(type);
    out.beta.push_back(fit.rate);
    if (!fit.ok(tol)) out.failures.push_back({i, type, fit.residual});
  }
  return out;
}

std::vector<std::size_t> strides_of(const Network& net) {
  std::vector<std::size_t> stride(net.nodes.size(), 0);
  std::size_t s = 1;
  for (std::size_t i = net.nodes.size(); i-- > 1;) {
    stride[i] = s;
    s *= net.nodes[i].spec.space->size();
  }
  return stride;
}

}  // namespace

NodeSpec source_node(const std::vector<std::string>& types, const std::vector<double>& rates) {
  if (types.size() != rates.size() || types.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "one rate per source type required");
  }
  NodeSpec n;
  n.name = "source";
  n.source = true;
  n.spec.space = StateSpace::line(0);
  n.spec.types = types;
  n.spec.internal = RateMatrix::zero(n.spec.space);
  for (double r : rates) {
    if (!(r > 0.0)) throw Error(ErrorCode::NonPositiveRate, "source rates must be positive");
    n.spec.arrival_kernels.emplace_back(n.spec.space, std::vector<Triplet>{{0, 0, 1.0}});
    n.spec.departure_rates.emplace_back(n.spec.space, std::vector<Triplet>{{0, 0, r}});
  }
  return n;
}

void RoutingKernel::set(std::size_t i, std::size_t u, std::size_t j, std::size_t v, double p) {
  if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorCode::BadRouting, "routing probabilities must be nonnegative");
  if (p == 0.0) {
    probs_.erase({i, u, j, v});
  } else {
    probs_[{i, u, j, v}] = p;
  }
}

double RoutingKernel::operator()(std::size_t i, std::size_t u, std::size_t j, std::size_t v) const {
  auto it = probs_.find({i, u, j, v});
  return it == probs_.end() ? 0.0 : it->second;
}

void Network::validate(double tol) const {
  if (nodes.empty() || !nodes[0].source) throw Error(ErrorCode::InvalidArgument, "node 0 must be the source");
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (nodes[i].source) throw Error(ErrorCode::InvalidArgument, "only node 0 may be a source");
  }
  if (nodes[0].spec.space->size() != 1) throw Error(ErrorCode::InvalidArgument, "the source has a single state");
  std::vector<std::vector<double>> rows(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) rows[i].assign(type_count(i), 0.0);
  for (const auto& [k, p] : routing.probs()) {
    if (k[0] >= nodes.size() || k[2] >= nodes.size() || k[1] >= type_count(k[0]) || k[3] >= type_count(k[2])) {
      throw Error(ErrorCode::BadRouting, "routing refers to an unknown node or type");
    }
    rows[k[0]][k[1]] += p;
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t u = 0; u < rows[i].size(); ++u) {
      if (std::abs(rows[i][u] - 1.0) > tol) {
        throw Error(ErrorCode::RoutingNotStochastic, "routing out of node " + std::to_string(i) + " type '" +
                                                         nodes[i].spec.types[u] + "' sums to " +
                                                         std::to_string(rows[i][u]));
      }
    }
  }
}

QueueModel node_model(const NodeSpec& node, const std::vector<double>& alpha) {
  auto m = build_reacting_system(node.spec, alpha);
  m.name = node.name;
  return m;
}

RateMatrix node_in_isolation(const NodeSpec& node, const std::vector<double>& alpha) {
  return node_model(node, alpha).q;
}

TrafficSolution solve_traffic(const Network& net, const TrafficOptions& opts) {
  net.validate();
  const std::size_t n = net.nodes.size();
  TrafficSolution sol;
  sol.beta.resize(n);
  for (std::size_t i = 0; i < n; ++i) sol.beta[i].assign(net.type_count(i), 0.0);
  const auto& src = net.nodes[0].spec;
  for (std::size_t u = 0; u < src.types.size(); ++u) sol.beta[0][u] = kernels::row_sums(src.departure_rates[u])[0];

  // Start from the source inflow pushed through the routing with beta = alpha,
  // so nodes fed only by other nodes begin with positive arrival rates.
  sol.alpha = route_flow(net, sol.beta);
  std::size_t total_types = 0;
  for (std::size_t i = 0; i < n; ++i) total_types += net.type_count(i);
  for (std::size_t sweep = 0; sweep < total_types; ++sweep) {
    auto b = sol.alpha;
    b[0] = sol.beta[0];
    auto next = route_flow(net, b);
    for (std::size_t i = 1; i < n; ++i) sol.alpha[i] = next[i];
  }

  std::vector<NodeSolve> solved(n);
  auto solve_all = [&]() {
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < n; ++i) {
      try {
        solved[i] = solve_node(net, i, sol.alpha[i], opts.tol);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    sol.failures.clear();
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& f : solved[i].failures) sol.failures.push_back(f);
      if (i > 0) sol.beta[i] = solved[i].beta;
    }
    if (opts.strict && !sol.failures.empty()) {
      const auto& f = sol.failures.front();
      throw Error(ErrorCode::NodeNotQuasiReversible, "node " + std::to_string(f.node) + " type '" + f.type +
                                                         "' is not quasi-reversible (residual " +
                                                         std::to_string(f.residual) + ")");
    }
  };

  for (sol.iterations = 1; sol.iterations <= opts.max_iter; ++sol.iterations) {
    solve_all();
    const auto target = route_flow(net, sol.beta);
    double change = 0.0;
    const double scale = std::max(max_entry(sol.alpha), 1e-300);
    for (std::size_t i = 1; i < n; ++i) {
      for (std::size_t u = 0; u < target[i].size(); ++u) {
        const double next = (1.0 - opts.damping) * sol.alpha[i][u] + opts.damping * target[i][u];
        change = std::max(change, std::abs(next - sol.alpha[i][u]) / scale);
        sol.alpha[i][u] = next;
      }
    }
    sol.alpha[0] = target[0];
    if (change <= opts.change_tol) {
      sol.converged = true;
      break;
    }
  }
  if (!sol.converged) {
    throw Error(ErrorCode::NoConvergence, "traffic iteration did not converge in " + std::to_string(opts.max_iter) +
                                              " sweeps");
  }
  solve_all();
  sol.node_pis.clear();
  for (auto& s : solved) sol.node_pis.push_back(std::move(s.pi));
  const auto routed = route_flow(net, sol.beta);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t u = 0; u < routed[i].size(); ++u) worst = std::max(worst, std::abs(routed[i][u] - sol.alpha[i][u]));
  }
  sol.residual = worst / std::max(max_entry(sol.alpha), 1e-300);
  return sol;
}

SpacePtr product_space(const Network& net) {
  net.validate();
  if (net.nodes.size() < 2) throw Error(ErrorCode::InvalidArgument, "network has no queueing node");
  std::size_t total = 1;
  std::size_t dim = 0;
  for (std::size_t i = 1; i < net.nodes.size(); ++i) {
    const auto s = net.nodes[i].spec.space->size();
    if (total > kMaxProductStates / std::max<std::size_t>(s, 1)) {
      throw Error(ErrorCode::ProductSpaceTooLarge, "product space exceeds " + std::to_string(kMaxProductStates) + " states");
    }
    total *= s;
    dim += net.nodes[i].spec.space->dimension();
  }
  const auto stride = strides_of(net);
  std::vector<State> states(total);
#pragma omp parallel for schedule(static)
  for (std::size_t x = 0; x < total; ++x) {
    State s;
    s.reserve(dim);
    for (std::size_t i = 1; i < net.nodes.size(); ++i) {
      const auto& part = net.nodes[i].spec.space->state((x / stride[i]) % net.nodes[i].spec.space->size());
      s.insert(s.end(), part.begin(), part.end());
    }
    states[x] = std::move(s);
  }
  return StateSpace::make(dim, std::move(states));
}

RateMatrix joint_generator(const Network& net) {
  const auto space = product_space(net);
  const std::size_t total = space->size();
  const std::size_t n = net.nodes.size();
  const auto stride = strides_of(net);
  const auto routes = routes_of(net);
  std::vector<std::vector<Triplet>> rows(total);
  std::vector<double> leak(total, 0.0);

#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t x = 0; x < total; ++x) {
    std::vector<std::size_t> k(n, 0);
    for (std::size_t i = 1; i < n; ++i) k[i] = (x / stride[i]) % net.nodes[i].spec.space->size();
    auto& row = rows[x];
    for (std::size_t i = 0; i < n; ++i) {
      const auto& spec = net.nodes[i].spec;
      const std::size_t base_i = x - k[i] * stride[i];
      for (std::size_t u = 0; u < spec.types.size(); ++u) {
        const auto& qd = spec.departure_rates[u];
        auto ys = qd.row_cols(k[i]);
        auto rates = qd.row_values(k[i]);
        for (std::size_t a = 0; a < ys.size(); ++a) {
          for (const auto& r : routes[i][u]) {
            const auto& kernel = net.nodes[r.node].spec.arrival_kernels[r.type];
            const double rate = rates[a] * r.p;
            // The i = j branch convolves departure and arrival on one coordinate.
            const std::size_t from = r.node == i ? ys[a] : k[r.node];
            const std::size_t base = r.node == i ? base_i : base_i + ys[a] * stride[i] - k[r.node] * stride[r.node];
            auto xs = kernel.row_cols(from);
            auto ps = kernel.row_values(from);
            for (std::size_t b = 0; b < xs.size(); ++b) row.push_back({x, base + xs[b] * stride[r.node], rate * ps[b]});
            leak[x] += rate * kernel.dropped()[from];
          }
        }
      }
      if (i == 0) continue;
      auto xs = spec.internal.row_cols(k[i]);
      auto vs = spec.internal.row_values(k[i]);
      for (std::size_t a = 0; a < xs.size(); ++a) row.push_back({x, base_i + xs[a] * stride[i], vs[a]});
    }
  }
  std::size_t nnz = 0;
  for (const auto& r : rows) nnz += r.size();
  std::vector<Triplet> all;
  all.reserve(nnz);
  for (auto& r : rows) all.insert(all.end(), r.begin(), r.end());
  return RateMatrix(space, all, std::move(leak));
}

Measure product_form_distribution(const Network& net, const TrafficSolution& traffic) {
  const auto space = product_space(net);
  const auto stride = strides_of(net);
  const std::size_t n = net.nodes.size();
  if (traffic.node_pis.size() != n) throw Error(ErrorCode::DimensionMismatch, "one node measure per node required");
  std::vector<double> w(space->size());
#pragma omp parallel for schedule(static)
  for (std::size_t x = 0; x < w.size(); ++x) {
    double v = 1.0;
    for (std::size_t i = 1; i < n; ++i) v *= traffic.node_pis[i][(x / stride[i]) % net.nodes[i].spec.space->size()];
    w[x] = v;
  }
  return Measure(space, std::move(w)).normalized();
}

ProductFormReport verify_product_form(const Network& net, double tol, TrafficOptions opts) {
  opts.strict = false;
  ProductFormReport rep;
  rep.traffic = solve_traffic(net, opts);
  const auto q = joint_generator(net);
  rep.product = product_form_distribution(net, rep.traffic);
  rep.joint = stationary_distribution(q);
  rep.tv_distance = 0.5 * kernels::l1_distance(rep.product.weights(), rep.joint.weights());
  rep.residual = kernels::balance_residual(q, rep.product.weights());
  for (std::size_t x = 0; x < q.size(); ++x) rep.leak += rep.product[x] * q.dropped()[x];
  rep.pass = rep.tv_distance <= tol + rep.leak;
  return rep;
}

Network reversed_network(const Network& net, const TrafficSolution& traffic) {
  net.validate();
  const std::size_t n = net.nodes.size();
  if (traffic.node_pis.size() != n) throw Error(ErrorCode::DimensionMismatch, "traffic solution has no node measures");
  Network out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = net.nodes[i];
    const auto& pi = traffic.node_pis[i];
    NodeSpec r;
    r.name = node.name;
    r.source = node.source;
    r.spec.space = node.spec.space;
    r.spec.types = node.spec.types;
    r.spec.internal = reverse(node.spec.internal, pi);
    for (std::size_t u = 0; u < node.spec.types.size(); ++u) {
      const auto& kernel = node.spec.arrival_kernels[u];
      r.spec.departure_rates.push_back(reverse(RateMatrix(kernel.space_ptr(), kernel.triplets()), pi)
                                           .scaled(traffic.alpha[i][u]));
      const double beta = traffic.beta[i][u];
      if (!(beta > 0.0)) throw Error(ErrorCode::NoPositiveSolution, "zero departure rate at node " + std::to_string(i));
      const auto back = reverse(node.spec.departure_rates[u], pi).scaled(1.0 / beta);
      auto sums = kernels::row_sums(back);
      for (auto& s : sums) s = std::max(0.0, 1.0 - s);
      r.spec.arrival_kernels.emplace_back(back.space_ptr(), back.triplets(), std::move(sums));
    }
    out.nodes.push_back(std::move(r));
  }
  for (const auto& [k, p] : net.routing.probs()) {
    const double a = traffic.alpha[k[2]][k[3]];
    if (a > 0.0) out.routing.set(k[2], k[3], k[0], k[1], traffic.beta[k[0]][k[1]] * p / a);
  }
  return out;
}

StateMask joint_interior(const Network& net) {
  const auto space = product_space(net);
  const auto stride = strides_of(net);
  const std::size_t n = net.nodes.size();
  std::vector<StateMask> edge(n);
  for (std::size_t i = 1; i < n; ++i) {
    const auto& spec = net.nodes[i].spec;
    edge[i].assign(spec.space->size(), 0);
    for (const auto& kernel : spec.arrival_kernels) {
      for (std::size_t k = 0; k < kernel.size(); ++k) {
        if (kernel.dropped()[k] > 0.0) edge[i][k] = 1;
      }
    }
  }
  StateMask out(space->size(), 1);
  for (std::size_t x = 0; x < out.size(); ++x) {
    for (std::size_t i = 1; i < n; ++i) {
      if (edge[i][(x / stride[i]) % net.nodes[i].spec.space->size()]) out[x] = 0;
    }
  }
  return out;
}

Network build_jackson(const std::vector<double>& lambda, const std::vector<double>& mu, const std::vector<int>& servers,
                      const std::vector<std::vector<double>>& p, const std::vector<int>& bounds) {
  const std::size_t n = mu.size();
  if (lambda.size() != n || servers.size() != n || p.size() != n || bounds.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "lambda, mu, servers, routing and bounds must agree in size");
  }
  double total = 0.0;
  for (double l : lambda) {
    if (!(l >= 0.0)) throw Error(ErrorCode::BadRouting, "external rates must be nonnegative");
    total += l;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::NonPositiveRate, "total external rate must be positive");
  Network net;
  net.nodes.push_back(source_node({""}, {total}));
  for (std::size_t i = 0; i < n; ++i) {
    NodeSpec node;
    node.name = "node" + std::to_string(i + 1);
    node.spec = mms_reacting_spec(mu[i], servers[i], bounds[i]);
    net.nodes.push_back(std::move(node));
  }
  for (std::size_t j = 0; j < n; ++j) net.routing.set(0, 0, j + 1, 0, lambda[j] / total);
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i].size() != n) throw Error(ErrorCode::BadRouting, "routing matrix must be square");
    double stay = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(p[i][j] >= 0.0)) throw Error(ErrorCode::BadRouting, "routing probabilities must be nonnegative");
      net.routing.set(i + 1, 0, j + 1, 0, p[i][j]);
      stay += p[i][j];
    }
    if (stay > 1.0 + 1e-12) throw Error(ErrorCode::BadRouting, "routing row " + std::to_string(i + 1) + " exceeds one");
    net.routing.set(i + 1, 0, 0, 0, std::max(0.0, 1.0 - stay));
  }
  net.validate();
  return net;
}

}  // namespace qrev
