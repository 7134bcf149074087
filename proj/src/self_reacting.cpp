#include "qrev/self_reacting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "qrev/error.hpp"
#include "qrev/kernels.hpp"
#include "qrev/reversal.hpp"

namespace qrev {

namespace {

void check_stochastic(const RoutingMatrix& r, double tol, const std::string& where) {
  for (std::size_t u = 0; u < r.size(); ++u) {
    if (r[u].size() != r.size()) throw Error(ErrorCode::RoutingNotStochastic, "routing matrix is not square" + where);
    double s = 0.0;
    for (double p : r[u]) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw Error(ErrorCode::RoutingNotStochastic, "negative routing probability" + where);
      }
      s += p;
    }
    if (std::abs(s - 1.0) > tol) {
      throw Error(ErrorCode::RoutingNotStochastic,
                  "routing row " + std::to_string(u) + " sums to " + std::to_string(s) + where);
    }
  }
}

std::vector<double> closed_class_stationary(const RoutingMatrix& r, const std::vector<std::size_t>& cls) {
  const auto k = static_cast<Eigen::Index>(cls.size());
  Eigen::MatrixXd a(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) a(j, i) = r[cls[static_cast<std::size_t>(i)]][cls[static_cast<std::size_t>(j)]];
    a(i, i) -= 1.0;
  }
  a.row(k - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  b(k - 1) = 1.0;
  Eigen::VectorXd x = a.fullPivLu().solve(b);
  std::vector<double> out(cls.size());
  for (Eigen::Index i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = std::max(x(i), 0.0);
  return out;
}

}  // namespace

void SelfReactingSpec::validate(double tol) const {
  if (!space) throw Error(ErrorCode::InvalidArgument, "self-reacting system has no state space");
  const std::size_t n = space->size();
  const std::size_t t = types.size();
  if (release.size() != t || arrival.size() != t) {
    throw Error(ErrorCode::DimensionMismatch, "one release matrix and one arrival kernel per type required");
  }
  if (routing.size() != n) throw Error(ErrorCode::DimensionMismatch, "one routing matrix per state required");
  if (internal.size() != n) throw Error(ErrorCode::DimensionMismatch, "internal rates on a different space");
  for (std::size_t y = 0; y < n; ++y) {
    if (routing[y].size() != t) throw Error(ErrorCode::RoutingNotStochastic, "routing matrix has the wrong size");
    check_stochastic(routing[y], tol, " at " + format_state(space->state(y)));
  }
  for (std::size_t u = 0; u < t; ++u) {
    if (release[u].size() != n || arrival[u].size() != n) {
      throw Error(ErrorCode::DimensionMismatch, "part defined on a different space");
    }
    const auto rows = kernels::row_sums(arrival[u]);
    for (std::size_t y = 0; y < n; ++y) {
      const double leak = arrival[u].dropped().empty() ? 0.0 : arrival[u].dropped()[y];
      if (std::abs(rows[y] + leak - 1.0) > tol) {
        throw Error(ErrorCode::KernelNotStochastic,
                    "arrival kernel of type '" + types[u] + "' at " + format_state(space->state(y)) + " is not stochastic");
      }
    }
  }
}

std::string triple_label(const std::string& u, const State& y, const std::string& u2) {
  return u + "@" + format_state(y) + ">" + u2;
}

SelfReactingModel build_self_reacting(SelfReactingSpec spec) {
  spec.validate();
  const std::size_t n = spec.space->size();
  const std::size_t t = spec.types.size();
  using Key = std::tuple<std::size_t, std::size_t, std::size_t>;  // (u, y, u')
  std::map<Key, std::vector<Triplet>> parts;
  std::vector<Triplet> all;
  std::vector<double> leak(n, 0.0);
  for (std::size_t u = 0; u < t; ++u) {
    const auto& rel = spec.release[u];
    for (std::size_t x = 0; x < n; ++x) {
      auto ys = rel.row_cols(x);
      auto rates = rel.row_values(x);
      for (std::size_t k = 0; k < ys.size(); ++k) {
        const std::size_t y = ys[k];
        for (std::size_t u2 = 0; u2 < t; ++u2) {
          const double r = spec.routing[y][u][u2];
          if (r == 0.0) continue;
          const auto& pa = spec.arrival[u2];
          auto xs = pa.row_cols(y);
          auto ps = pa.row_values(y);
          auto& part = parts[{u, y, u2}];
          for (std::size_t j = 0; j < xs.size(); ++j) {
            const Triplet e{x, xs[j], rates[k] * r * ps[j]};
            part.push_back(e);
            all.push_back(e);
          }
          if (!pa.dropped().empty()) leak[x] += rates[k] * r * pa.dropped()[y];
        }
      }
    }
  }
  for (const auto& e : spec.internal.triplets()) all.push_back(e);

  // Every label's gamma image must be a label too, even when its part is empty.
  std::map<Key, std::vector<Triplet>> closed = parts;
  for (const auto& [key, _] : parts) {
    const auto& [u, y, u2] = key;
    closed.try_emplace({u2, y, u});
  }
  std::vector<std::string> labels;
  std::vector<RateMatrix> mats;
  std::map<std::string, std::string> gamma;
  for (const auto& [key, triplets] : closed) {
    const auto& [u, y, u2] = key;
    const auto& ys = spec.space->state(y);
    const auto label = triple_label(spec.types[u], ys, spec.types[u2]);
    labels.push_back(label);
    mats.emplace_back(spec.space, triplets);
    gamma[label] = triple_label(spec.types[u2], ys, spec.types[u]);
  }

  SelfReactingModel out;
  auto& m = out.model;
  m.name = "self_reacting";
  m.space = spec.space;
  m.q = RateMatrix(spec.space, all, leak);
  m.family = SubTransitionFamily(m.q, std::move(labels), std::move(mats), gamma);
  out.spec = std::move(spec);
  return out;
}

RoutingInvariant routing_invariant(const RoutingMatrix& r, double tol) {
  check_stochastic(r, 1e-9, "");
  const std::size_t t = r.size();
  RoutingInvariant out;
  out.nu.assign(t, 0.0);
  if (t == 0) return out;
  // reach[i][j]: j reachable from i along positive entries.
  std::vector<std::vector<char>> reach(t, std::vector<char>(t, 0));
  for (std::size_t i = 0; i < t; ++i) {
    reach[i][i] = 1;
    for (std::size_t j = 0; j < t; ++j) {
      if (r[i][j] > tol) reach[i][j] = 1;
    }
  }
  for (std::size_t k = 0; k < t; ++k) {
    for (std::size_t i = 0; i < t; ++i) {
      if (!reach[i][k]) continue;
      for (std::size_t j = 0; j < t; ++j) {
        if (reach[k][j]) reach[i][j] = 1;
      }
    }
  }
  std::vector<char> assigned(t, 0);
  std::vector<std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < t; ++i) {
    if (assigned[i]) continue;
    std::vector<std::size_t> cls;
    bool is_closed = true;
    for (std::size_t j = 0; j < t; ++j) {
      if (reach[i][j] && reach[j][i]) cls.push_back(j);
      if (reach[i][j] && !reach[j][i]) is_closed = false;
    }
    for (std::size_t j : cls) assigned[j] = 1;
    if (is_closed) classes.push_back(std::move(cls));
  }
  const double share = 1.0 / static_cast<double>(classes.size());
  for (const auto& cls : classes) {
    const auto v = closed_class_stationary(r, cls);
    for (std::size_t k = 0; k < cls.size(); ++k) out.nu[cls[k]] = share * v[k];
  }
  if (classes.size() > 1) {
    out.warning = "routing has " + std::to_string(classes.size()) + " closed classes; each gets an equal share";
  }
  for (std::size_t u = 0; u < t; ++u) {
    if (out.nu[u] > 0.0) continue;
    for (std::size_t v = 0; v < t; ++v) {
      if (r[v][u] > tol) {
        out.positive = false;
        out.warning = "type " + std::to_string(u) + " receives routed mass but is transient";
      }
    }
  }
  return out;
}

std::vector<double> positive_routing_invariant(const RoutingMatrix& r, double tol) {
  auto inv = routing_invariant(r, tol);
  if (!inv.positive) throw Error(ErrorCode::NoPositiveSolution, inv.warning);
  return inv.nu;
}

RoutingMatrix reversed_routing(const RoutingMatrix& r, const std::vector<double>& nu) {
  const std::size_t t = r.size();
  if (nu.size() != t) throw Error(ErrorCode::DimensionMismatch, "one weight per type required");
  RoutingMatrix out(t, std::vector<double>(t, 0.0));
  for (std::size_t v = 0; v < t; ++v) {
    if (nu[v] > 0.0) {
      for (std::size_t u = 0; u < t; ++u) out[v][u] = nu[u] * r[u][v] / nu[v];
      continue;
    }
    for (std::size_t u = 0; u < t; ++u) {
      if (nu[u] * r[u][v] > 0.0) {
        throw Error(ErrorCode::ZeroWeightType, "type " + std::to_string(v) + " has zero weight but receives mass");
      }
    }
    out[v][v] = 1.0;
  }
  return out;
}

std::vector<RateMatrix> balanced_departure_rates(
    const SpacePtr& space, const std::vector<double>& phi, const std::vector<std::vector<double>>& nu,
    const std::function<std::optional<std::size_t>(std::size_t, std::size_t)>& release_map) {
  const std::size_t n = space->size();
  if (phi.size() != n || nu.size() != n) throw Error(ErrorCode::DimensionMismatch, "phi and nu must cover the space");
  for (std::size_t x = 0; x < n; ++x) {
    if (!(phi[x] > 0.0)) throw Error(ErrorCode::ZeroPhi, "Phi must be positive at " + format_state(space->state(x)));
  }
  const std::size_t t = n == 0 ? 0 : nu[0].size();
  std::vector<std::vector<Triplet>> parts(t);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t u = 0; u < t; ++u) {
      if (nu[y][u] == 0.0) continue;
      if (auto x = release_map(y, u)) parts[u].push_back({*x, y, nu[y][u] / phi[*x]});
    }
  }
  std::vector<RateMatrix> out;
  for (auto& p : parts) out.emplace_back(space, p);
  return out;
}

SelfReactingStationary self_reacting_stationary(const SelfReactingModel& m, const std::vector<double>& phi,
                                                double tol) {
  const auto& spec = m.spec;
  const std::size_t n = spec.space->size();
  if (phi.size() != n) throw Error(ErrorCode::DimensionMismatch, "phi must cover the space");
  for (std::size_t x = 0; x < n; ++x) {
    if (!(phi[x] > 0.0)) throw Error(ErrorCode::ZeroPhi, "Phi must be positive at " + format_state(spec.space->state(x)));
  }
  Measure w(spec.space, phi);
  SelfReactingStationary out{w.normalized(), 0.0, 0.0};
  out.internal_residual = detailed_balance_residual(spec.internal, w);
  const auto a = kernels::row_sums(m.model.q);
  const auto b = kernels::row_sums(spec.internal);
  for (std::size_t x = 0; x < n; ++x) {
    if (!(b[x] < a[x])) {
      throw Error(ErrorCode::InternalBalanceViolated,
                  "internal rate is not below the exit rate at " + format_state(spec.space->state(x)));
    }
  }
  if (out.internal_residual > tol) {
    throw Error(ErrorCode::InternalBalanceViolated, "internal transitions are not self-dual under Phi");
  }
  const std::size_t t = spec.types.size();
  // nu(u, y) = sum_x Phi(x) q_du(x, y)
  std::vector<std::vector<double>> nu(n, std::vector<double>(t, 0.0));
  for (std::size_t u = 0; u < t; ++u) {
    const auto& rel = spec.release[u];
    for (std::size_t y = 0; y < n; ++y) {
      auto xs = rel.col_rows(y);
      auto vs = rel.col_values(y);
      for (std::size_t k = 0; k < xs.size(); ++k) nu[y][u] += phi[xs[k]] * vs[k];
    }
  }
  std::vector<double> inflow(n, 0.0);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t u2 = 0; u2 < t; ++u2) {
      double routed = 0.0;
      for (std::size_t u = 0; u < t; ++u) routed += nu[y][u] * spec.routing[y][u][u2];
      if (routed == 0.0) continue;
      auto xs = spec.arrival[u2].row_cols(y);
      auto ps = spec.arrival[u2].row_values(y);
      for (std::size_t k = 0; k < xs.size(); ++k) inflow[xs[k]] += routed * ps[k];
    }
  }
  double worst = 0.0, scale = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    const double out_flow = phi[x] * (a[x] - b[x]);
    worst = std::max(worst, std::abs(out_flow - inflow[x]));
    scale += out_flow;
  }
  out.arrival_residual = worst / scale;
  if (out.arrival_residual > tol) {
    throw Error(ErrorCode::ArrivalConsistencyFailed,
                "routed inflow does not match Phi(x)(a(x) - b(x)); residual " + std::to_string(out.arrival_residual));
  }
  return out;
}

SelfReactingModel build_batch_movement_network(const BatchMovementParams& p) {
  if (p.nodes < 1) throw Error(ErrorCode::InvalidArgument, "at least one node required");
  const auto dim = static_cast<std::size_t>(p.nodes);
  if (p.bounds.size() != dim) throw Error(ErrorCode::DimensionMismatch, "one bound per node required");
  if (p.types.empty()) throw Error(ErrorCode::InvalidArgument, "at least one batch type required");
  if (!p.routing || !p.phi) throw Error(ErrorCode::InvalidArgument, "routing and Phi must be set");
  for (const auto& u : p.types) {
    if (u.size() != dim + 1) throw Error(ErrorCode::DimensionMismatch, "batch types have n + 1 entries");
    if (std::any_of(u.begin(), u.end(), [](int v) { return v < 0; })) {
      throw Error(ErrorCode::InvalidArgument, "batch sizes must be nonnegative");
    }
    if (p.population && u[0] != 0) {
      throw Error(ErrorCode::InvalidArgument, "closed networks have no source component");
    }
  }
  const std::size_t t = p.types.size();
  auto size_of = [&](std::size_t u) {
    int s = 0;
    for (int v : p.types[u]) s += v;
    return s;
  };
  auto plus = [&](std::size_t u) { return State(p.types[u].begin() + 1, p.types[u].end()); };

  SpacePtr space;
  if (p.population) {
    std::vector<State> states;
    const auto box = StateSpace::box(p.bounds);
    for (const auto& s : box->states()) {
      int total = 0;
      for (int v : s) total += v;
      if (total <= *p.population) states.push_back(s);
    }
    space = StateSpace::make(dim, std::move(states));
  } else {
    space = StateSpace::box(p.bounds);
  }
  const std::size_t n = space->size();

  SelfReactingSpec spec;
  spec.space = space;
  for (const auto& u : p.types) spec.types.push_back(format_state(u));
  spec.internal = RateMatrix::zero(space);
  spec.routing.assign(n, RoutingMatrix(t, std::vector<double>(t, 0.0)));
  std::vector<std::vector<double>> nu(n, std::vector<double>(t, 0.0));
  std::vector<std::vector<std::optional<std::size_t>>> insert(n, std::vector<std::optional<std::size_t>>(t));
  for (std::size_t y = 0; y < n; ++y) {
    const auto& ys = space->state(y);
    RoutingMatrix r(t, std::vector<double>(t));
    for (std::size_t u = 0; u < t; ++u) {
      for (std::size_t u2 = 0; u2 < t; ++u2) {
        r[u][u2] = p.routing(u, ys, u2);
        if (r[u][u2] > 0.0 && size_of(u) != size_of(u2)) {
          throw Error(ErrorCode::BatchSizeNotConserved,
                      "routing " + spec.types[u] + " -> " + spec.types[u2] + " changes the batch size");
        }
      }
      State target = ys;
      const auto up = plus(u);
      for (std::size_t i = 0; i < dim; ++i) target[i] += up[i];
      insert[y][u] = space->index_of(target);
    }
    check_stochastic(r, 1e-9, " at " + format_state(ys));
    if (p.weight_by_nu) nu[y] = routing_invariant(r).nu;
    for (std::size_t u = 0; u < t; ++u) {
      for (std::size_t u2 = 0; u2 < t; ++u2) {
        if (insert[y][u2]) {
          spec.routing[y][u][u2] += r[u][u2];
        } else {
          spec.routing[y][u][u] += r[u][u2];
        }
      }
    }
  }
  std::vector<std::vector<Triplet>> rel(t), arr(t);
  std::vector<std::vector<double>> blocked(t, std::vector<double>(n, 0.0));
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t u = 0; u < t; ++u) {
      if (insert[y][u]) {
        arr[u].push_back({y, *insert[y][u], 1.0});
      } else {
        blocked[u][y] = 1.0;
      }
    }
  }
  for (std::size_t x = 0; x < n; ++x) {
    const auto& xs = space->state(x);
    const double phi = p.phi(xs);
    if (!(phi > 0.0)) throw Error(ErrorCode::ZeroPhi, "Phi must be positive at " + format_state(xs));
    for (std::size_t u = 0; u < t; ++u) {
      State ys = xs;
      const auto up = plus(u);
      bool ok = true;
      for (std::size_t i = 0; i < dim; ++i) {
        ys[i] -= up[i];
        ok = ok && ys[i] >= 0;
      }
      if (!ok) continue;
      const auto y = space->index_of(ys);
      if (!y) continue;
      double rate;
      if (p.release_override) {
        rate = p.release_override(xs, u);
      } else {
        const double psi = p.psi ? p.psi(ys) : 1.0;
        if (!(psi > 0.0)) throw Error(ErrorCode::ZeroPhi, "Psi must be positive at " + format_state(ys));
        rate = psi * (p.weight_by_nu ? nu[*y][u] : 1.0) / phi;
      }
      if (rate > 0.0) rel[u].push_back({x, *y, rate});
    }
  }
  for (std::size_t u = 0; u < t; ++u) {
    spec.release.emplace_back(space, rel[u]);
    spec.arrival.emplace_back(space, arr[u], blocked[u]);
  }
  auto out = build_self_reacting(std::move(spec));
  out.model.name = "batch_movement";
  out.model.params["nodes"] = p.nodes;
  if (p.population) out.model.params["population"] = *p.population;
  if (!p.release_override) {
    std::vector<double> w(n);
    for (std::size_t x = 0; x < n; ++x) w[x] = p.phi(space->state(x));
    if (p.population) {
      for (std::size_t x = 0; x < n; ++x) {
        int total = 0;
        for (int v : space->state(x)) total += v;
        if (total != *p.population) w[x] = 0.0;
      }
    }
    // Without the nu weights the rates are balanced only when the caller
    // absorbs nu into Psi / Phi, so the caller supplies the closed form.
    if (p.weight_by_nu) out.model.closed_form_pi = Measure(space, std::move(w)).normalized();
  }
  return out;
}

SelfReactingModel build_whittle(int nodes, const std::function<double(const State&)>& phi,
                                const std::function<double(const State&)>& psi, const std::vector<double>& w,
                                const std::vector<int>& bounds) {
  if (nodes < 1 || w.size() != static_cast<std::size_t>(nodes)) {
    throw Error(ErrorCode::DimensionMismatch, "one weight per node required");
  }
  for (double v : w) {
    if (!(v > 0.0)) throw Error(ErrorCode::NonPositiveRate, "node weights must be positive");
  }
  std::vector<double> weight{1.0};
  weight.insert(weight.end(), w.begin(), w.end());
  double total = 0.0;
  for (double v : weight) total += v;
  BatchMovementParams p;
  p.nodes = nodes;
  for (int i = 0; i <= nodes; ++i) {
    std::vector<int> e(static_cast<std::size_t>(nodes) + 1, 0);
    e[static_cast<std::size_t>(i)] = 1;
    p.types.push_back(e);
  }
  p.routing = [weight, total](std::size_t, const State&, std::size_t v) { return weight[v] / total; };
  p.phi = phi;
  p.psi = psi;
  p.weight_by_nu = false;
  p.bounds = bounds;
  auto out = build_batch_movement_network(p);
  out.model.name = "whittle";
  const auto& space = out.model.space;
  std::vector<double> cf(space->size());
  for (std::size_t x = 0; x < space->size(); ++x) {
    const auto& s = space->state(x);
    double v = phi(s);
    for (std::size_t i = 0; i < w.size(); ++i) v *= std::pow(w[i], s[i]);
    cf[x] = v;
  }
  out.model.closed_form_pi = Measure(space, std::move(cf)).normalized();
  return out;
}

BatchMovementParams jackson_batch_movement(const std::vector<double>& lambda, const std::vector<double>& mu,
                                           const RoutingMatrix& p, const std::vector<int>& bounds) {
  const std::size_t n = mu.size();
  if (lambda.size() != n || p.size() != n || bounds.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "lambda, mu, routing and bounds must agree in size");
  }
  double big_lambda = 0.0;
  for (double l : lambda) big_lambda += l;
  if (!(big_lambda > 0.0)) throw Error(ErrorCode::NonPositiveRate, "total external rate must be positive");
  RoutingMatrix r(n + 1, std::vector<double>(n + 1, 0.0));
  for (std::size_t j = 0; j < n; ++j) r[0][j + 1] = lambda[j] / big_lambda;
  for (std::size_t i = 0; i < n; ++i) {
    double stay = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      r[i + 1][j + 1] = p[i][j];
      stay += p[i][j];
    }
    if (stay > 1.0 + 1e-12) throw Error(ErrorCode::BadRouting, "routing row exceeds one");
    r[i + 1][0] = std::max(0.0, 1.0 - stay);
  }
  const auto nu = positive_routing_invariant(r);
  std::vector<double> rho(n);
  for (std::size_t i = 0; i < n; ++i) rho[i] = big_lambda * nu[i + 1] / nu[0] / mu[i];
  BatchMovementParams out;
  out.nodes = static_cast<int>(n);
  for (std::size_t i = 0; i <= n; ++i) {
    std::vector<int> e(n + 1, 0);
    e[i] = 1;
    out.types.push_back(e);
  }
  out.routing = [r](std::size_t u, const State&, std::size_t v) { return r[u][v]; };
  auto phi = [rho](const State& x) {
    double v = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) v *= std::pow(rho[i], x[i]);
    return v;
  };
  out.phi = phi;
  const double scale = big_lambda / nu[0];
  out.psi = [phi, scale](const State& y) { return scale * phi(y); };
  out.bounds = bounds;
  return out;
}

RoutingReversalReport check_routing_reversal(const SelfReactingModel& m, const Measure& pi, double tol) {
  const auto& spec = m.spec;
  const std::size_t n = spec.space->size();
  const std::size_t t = spec.types.size();
  if (pi.size() != n) throw Error(ErrorCode::DimensionMismatch, "measure and model sizes differ");
  std::vector<std::vector<double>> beta(n, std::vector<double>(t, 0.0));
  double total = 0.0;
  for (std::size_t u = 0; u < t; ++u) {
    for (std::size_t y = 0; y < n; ++y) {
      auto xs = spec.release[u].col_rows(y);
      auto vs = spec.release[u].col_values(y);
      for (std::size_t k = 0; k < xs.size(); ++k) beta[y][u] += pi[xs[k]] * vs[k];
      total += beta[y][u];
    }
  }
  RoutingReversalReport rep;
  for (std::size_t y = 0; y < n; ++y) {
    const auto& r = spec.routing[y];
    std::vector<double> beta_t(t, 0.0);
    for (std::size_t u = 0; u < t; ++u) {
      for (std::size_t v = 0; v < t; ++v) beta_t[v] += beta[y][u] * r[u][v];
    }
    for (std::size_t u = 0; u < t; ++u) {
      rep.departure_residual = std::max(rep.departure_residual, std::abs(beta[y][u] - beta_t[u]) / total);
    }
    RoutingMatrix rt(t, std::vector<double>(t, 0.0));
    for (std::size_t v = 0; v < t; ++v) {
      if (beta_t[v] > 0.0) {
        for (std::size_t u = 0; u < t; ++u) rt[v][u] = beta[y][u] * r[u][v] / beta_t[v];
      } else {
        rt[v][v] = 1.0;
      }
    }
    const auto nu = routing_invariant(r).nu;
    for (std::size_t u = 0; u < t; ++u) {
      double s = 0.0;
      for (std::size_t v = 0; v < t; ++v) s += nu[v] * rt[v][u];
      rep.invariance_residual = std::max(rep.invariance_residual, std::abs(s - nu[u]));
    }
    const auto rn = reversed_routing(r, nu);
    for (std::size_t v = 0; v < t; ++v) {
      for (std::size_t u = 0; u < t; ++u) rep.reversal_gap = std::max(rep.reversal_gap, std::abs(rn[v][u] - rt[v][u]));
    }
  }
  rep.departure_holds = rep.departure_residual <= tol;
  rep.reversed_invariant = rep.invariance_residual <= tol;
  return rep;
}

}  // namespace qrev
