#include "qrev/models.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "qrev/error.hpp"
#include "qrev/kernels.hpp"
#include "qrev/reversal.hpp"

namespace qrev {

std::string arrival_label(const std::string& type) { return type.empty() ? "a" : "a:" + type; }
std::string departure_label(const std::string& type) { return type.empty() ? "d" : "d:" + type; }

std::map<std::string, RateMatrix> QueueModel::departures_by_type() const {
  std::map<std::string, RateMatrix> out;
  for (const auto& t : types) out.emplace(t, family.part(departure_label(t)));
  return out;
}

std::map<std::string, RateMatrix> QueueModel::arrivals_by_type() const {
  std::map<std::string, RateMatrix> out;
  for (const auto& t : types) out.emplace(t, family.part(arrival_label(t)));
  return out;
}

RateMatrix QueueModel::total_departures() const {
  RateMatrix total = RateMatrix::zero(space);
  for (const auto& t : types) total = total + family.part(departure_label(t));
  return total;
}

void ReactingSystemSpec::validate(double tol) const {
  if (!space) throw Error(ErrorCode::InvalidArgument, "reacting system has no state space");
  if (arrival_kernels.size() != types.size() || departure_rates.size() != types.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one arrival kernel and one departure matrix per type required");
  }
  auto check_size = [&](const RateMatrix& m) {
    if (m.size() != space->size()) throw Error(ErrorCode::DimensionMismatch, "part defined on a different space");
  };
  check_size(internal);
  for (const auto& m : departure_rates) check_size(m);
  for (std::size_t u = 0; u < types.size(); ++u) {
    const auto& p = arrival_kernels[u];
    check_size(p);
    const auto rows = kernels::row_sums(p);
    for (std::size_t x = 0; x < rows.size(); ++x) {
      const double leak = p.dropped().empty() ? 0.0 : p.dropped()[x];
      if (std::abs(rows[x] + leak - 1.0) > tol) {
        throw Error(ErrorCode::KernelNotStochastic, "arrival kernel of type '" + types[u] + "' at state " +
                                                        format_state(space->state(x)) + " sums to " +
                                                        std::to_string(rows[x] + leak));
      }
    }
  }
}

RateMatrix arrival_part(const RateMatrix& kernel, double alpha) {
  std::vector<Triplet> t;
  std::vector<double> leak(kernel.size(), 0.0);
  for (const auto& e : kernel.triplets()) t.push_back({e.from, e.to, alpha * e.value});
  if (!kernel.dropped().empty()) {
    for (std::size_t x = 0; x < kernel.size(); ++x) {
      if (kernel.dropped()[x] > 0.0) {
        t.push_back({x, x, alpha * kernel.dropped()[x]});
        leak[x] = alpha * kernel.dropped()[x];
      }
    }
  }
  return RateMatrix(kernel.space_ptr(), t, leak);
}

QueueModel build_reacting_system(const ReactingSystemSpec& spec, const std::vector<double>& alpha) {
  spec.validate();
  if (alpha.size() != spec.types.size()) throw Error(ErrorCode::DimensionMismatch, "one arrival rate per type required");
  QueueModel m;
  m.name = "reacting";
  m.space = spec.space;
  m.types = spec.types;
  std::vector<std::string> labels;
  std::vector<RateMatrix> parts;
  std::map<std::string, std::string> gamma;
  RateMatrix q = spec.internal;
  for (std::size_t u = 0; u < spec.types.size(); ++u) {
    if (!(alpha[u] >= 0.0) || !std::isfinite(alpha[u])) {
      throw Error(ErrorCode::NonPositiveRate, "arrival rate of type '" + spec.types[u] + "' must be nonnegative");
    }
    auto qa = arrival_part(spec.arrival_kernels[u], alpha[u]);
    const auto& qd = spec.departure_rates[u];
    q = q + qa + qd;
    const auto la = arrival_label(spec.types[u]);
    const auto ld = departure_label(spec.types[u]);
    labels.push_back(la);
    parts.push_back(std::move(qa));
    labels.push_back(ld);
    parts.push_back(qd);
    gamma[la] = ld;
    gamma[ld] = la;
    m.params["alpha_" + (spec.types[u].empty() ? std::string("0") : spec.types[u])] = alpha[u];
  }
  m.q = q;
  m.family = SubTransitionFamily(std::move(q), std::move(labels), std::move(parts), gamma);
  return m;
}

QueueModel build_birth_death(const std::vector<double>& up, const std::vector<double>& down, double boundary_up) {
  if (up.size() != down.size()) throw Error(ErrorCode::DimensionMismatch, "up and down rates must have equal length");
  const auto n = up.size();
  auto space = StateSpace::line(static_cast<int>(n));
  std::vector<Triplet> tu, td;
  for (std::size_t x = 0; x < n; ++x) {
    if (!(up[x] > 0.0) || !(down[x] > 0.0) || !std::isfinite(up[x]) || !std::isfinite(down[x])) {
      throw Error(ErrorCode::NonPositiveRate, "birth-death rates must be positive at level " + std::to_string(x));
    }
    tu.push_back({x, x + 1, up[x]});
    td.push_back({x + 1, x, down[x]});
  }
  if (boundary_up < 0.0) throw Error(ErrorCode::NonPositiveRate, "boundary rate must be nonnegative");
  std::vector<double> leak(n + 1, 0.0);
  if (boundary_up > 0.0) {
    tu.push_back({n, n, boundary_up});
    leak[n] = boundary_up;
  }
  RateMatrix qa(space, tu, leak);
  RateMatrix qd(space, td);
  QueueModel m;
  m.name = "birth_death";
  m.space = space;
  m.types = {""};
  m.q = qa + qd;
  m.family = SubTransitionFamily(m.q, {"a", "d"}, {qa, qd}, {{"a", "d"}, {"d", "a"}});
  m.closed_form_pi = birth_death_measure(m.q).normalized();
  return m;
}

ReactingSystemSpec mms_reacting_spec(double mu, int servers, int bound) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw Error(ErrorCode::NonPositiveRate, "service rate must be positive");
  if (servers < 1) throw Error(ErrorCode::InvalidArgument, "at least one server required");
  if (bound < 1) throw Error(ErrorCode::InvalidArgument, "truncation bound must be at least 1");
  auto space = StateSpace::line(bound);
  std::vector<Triplet> pa, qd;
  std::vector<double> blocked(static_cast<std::size_t>(bound) + 1, 0.0);
  for (int x = 0; x < bound; ++x) pa.push_back({std::size_t(x), std::size_t(x + 1), 1.0});
  blocked[static_cast<std::size_t>(bound)] = 1.0;
  for (int x = 1; x <= bound; ++x) qd.push_back({std::size_t(x), std::size_t(x - 1), std::min(x, servers) * mu});
  ReactingSystemSpec spec;
  spec.space = space;
  spec.types = {""};
  spec.arrival_kernels = {RateMatrix(space, pa, blocked)};
  spec.departure_rates = {RateMatrix(space, qd)};
  spec.internal = RateMatrix::zero(space);
  return spec;
}

ReactingSystemSpec mm1_reacting_spec(double mu, int bound) { return mms_reacting_spec(mu, 1, bound); }

QueueModel build_mms(double lambda, double mu, int servers, int bound) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::NonPositiveRate, "arrival rate must be positive");
  auto m = build_reacting_system(mms_reacting_spec(mu, servers, bound), {lambda});
  m.name = servers == 1 ? "mm1" : "mms";
  m.params = {{"lambda", lambda}, {"mu", mu}, {"servers", servers}, {"rho", lambda / (servers * mu)}};
  std::vector<double> w(static_cast<std::size_t>(bound) + 1);
  w[0] = 1.0;
  for (int x = 1; x <= bound; ++x) w[static_cast<std::size_t>(x)] = w[static_cast<std::size_t>(x - 1)] * lambda / (std::min(x, servers) * mu);
  Measure pi(m.space, std::move(w));
  m.closed_form_pi = lambda < servers * mu ? pi.normalized() : pi;
  return m;
}

QueueModel build_mm1(double lambda, double mu, int bound) { return build_mms(lambda, mu, 1, bound); }

ReactingSystemSpec batch_service_reacting_spec(double mu, const std::vector<double>& batch_dist,
                                               BatchCounting counting, int bound) {
  if (batch_dist.empty()) throw Error(ErrorCode::InvalidDistribution, "batch distribution is empty");
  double total = 0.0;
  for (double p : batch_dist) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidDistribution, "batch probabilities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::InvalidDistribution, "batch probabilities must sum to one");
  auto spec = mm1_reacting_spec(mu, bound);
  std::vector<Triplet> dep, internal;
  for (int x = 1; x <= bound; ++x) {
    for (std::size_t k = 0; k < batch_dist.size(); ++k) {
      if (batch_dist[k] == 0.0) continue;
      const int b = static_cast<int>(k) + 1;
      Triplet t{std::size_t(x), std::size_t(std::max(x - b, 0)), mu * batch_dist[k]};
      if (counting == BatchCounting::All || b <= x) {
        dep.push_back(t);
      } else {
        internal.push_back(t);
      }
    }
  }
  spec.departure_rates = {RateMatrix(spec.space, dep)};
  spec.internal = RateMatrix(spec.space, internal);
  return spec;
}

QueueModel build_batch_service_queue(double lambda, double mu, const std::vector<double>& batch_dist,
                                     BatchCounting counting, int bound) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::NonPositiveRate, "arrival rate must be positive");
  auto m = build_reacting_system(batch_service_reacting_spec(mu, batch_dist, counting, bound), {lambda});
  m.name = "batch_service";
  m.params = {{"lambda", lambda}, {"mu", mu}, {"full_batches_only", counting == BatchCounting::FullBatches ? 1.0 : 0.0}};
  return m;
}

QueueModel restrict_to_reachable(const QueueModel& m, const State& start) {
  const auto& q = m.q;
  std::vector<std::size_t> index(q.size(), q.size());
  std::vector<std::size_t> order;
  std::deque<std::size_t> queue{m.space->require_index(start)};
  index[queue.front()] = 0;
  while (!queue.empty()) {
    const auto x = queue.front();
    queue.pop_front();
    order.push_back(x);
    for (auto y : q.row_cols(x)) {
      if (index[y] == q.size()) {
        index[y] = 0;
        queue.push_back(y);
      }
    }
  }
  std::sort(order.begin(), order.end());
  std::vector<State> states;
  for (std::size_t k = 0; k < order.size(); ++k) {
    index[order[k]] = k;
    states.push_back(m.space->state(order[k]));
  }
  auto space = StateSpace::make(m.space->dimension(), std::move(states));
  auto remap = [&](const RateMatrix& r) {
    std::vector<Triplet> t;
    std::vector<double> dropped(order.size(), 0.0);
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto x = order[k];
      auto cols = r.row_cols(x);
      auto vals = r.row_values(x);
      for (std::size_t j = 0; j < cols.size(); ++j) t.push_back({k, index[cols[j]], vals[j]});
      if (!r.dropped().empty()) dropped[k] = r.dropped()[x];
    }
    return RateMatrix(space, t, std::move(dropped));
  };
  QueueModel out;
  out.name = m.name;
  out.space = space;
  out.q = remap(q);
  std::vector<RateMatrix> parts;
  std::map<std::string, std::string> gamma;
  const auto& fam = m.family;
  for (std::size_t u = 0; u < fam.label_count(); ++u) {
    parts.push_back(remap(fam.parts()[u]));
    gamma[fam.labels()[u]] = fam.labels()[fam.gamma(u)];
  }
  out.family = SubTransitionFamily(out.q, fam.labels(), std::move(parts), gamma);
  if (m.closed_form_pi) {
    std::vector<double> w(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) w[k] = (*m.closed_form_pi)[order[k]];
    out.closed_form_pi = Measure(space, std::move(w)).normalized();
  }
  out.params = m.params;
  out.types = m.types;
  return out;
}

}  // namespace qrev
