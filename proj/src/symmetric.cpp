#include "qrev/symmetric.hpp"

#include <cmath>

#include "qrev/error.hpp"

namespace qrev {

double SymmetricQueueParams::phi(int n) const {
  double s = 0.0;
  for (int l = 1; l <= n; ++l) s += gamma(l, n);
  return s;
}

SymmetricQueueParams processor_sharing(std::vector<double> alpha, std::vector<std::vector<double>> eta) {
  return {std::move(alpha), std::move(eta), [](int, int n) { return 1.0 / n; }, [](int, int n) { return 1.0 / n; },
          "ps"};
}

SymmetricQueueParams preemptive_lcfs(std::vector<double> alpha, std::vector<std::vector<double>> eta) {
  return {std::move(alpha), std::move(eta), [](int l, int n) { return l == n ? 1.0 : 0.0; },
          [](int l, int n) { return l == n ? 1.0 : 0.0; }, "lcfs"};
}

SymmetricQueueParams fcfs(std::vector<double> alpha, std::vector<std::vector<double>> eta) {
  return {std::move(alpha), std::move(eta), [](int l, int) { return l == 1 ? 1.0 : 0.0; },
          [](int l, int n) { return l == n ? 1.0 : 0.0; }, "fcfs"};
}

std::vector<double> erlang_stages(int k, double mean) {
  if (k < 1 || !(mean > 0.0)) throw Error(ErrorCode::InvalidArgument, "Erlang stages need k >= 1 and a positive mean");
  return std::vector<double>(static_cast<std::size_t>(k), k / mean);
}

bool check_symmetric(const SymmetricQueueParams& params, int n_max, double tol) {
  for (int n = 1; n <= n_max; ++n) {
    const double phi = params.phi(n);
    for (int l = 1; l <= n; ++l) {
      const double lhs = phi * params.delta(l, n);
      const double rhs = params.gamma(l, n);
      if (std::abs(lhs - rhs) > tol * std::max(1.0, std::abs(rhs))) return false;
    }
  }
  return true;
}

namespace {

void validate(const SymmetricQueueParams& p, int n_max) {
  if (n_max < 1) throw Error(ErrorCode::InvalidArgument, "n_max must be at least 1");
  if (p.alpha.empty() || p.eta.size() != p.alpha.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one arrival rate and one stage list per type required");
  }
  if (!p.gamma || !p.delta) throw Error(ErrorCode::InvalidArgument, "gamma and delta must be set");
  for (std::size_t u = 0; u < p.alpha.size(); ++u) {
    if (!(p.alpha[u] > 0.0)) throw Error(ErrorCode::NonPositiveRate, "arrival rates must be positive");
    if (p.eta[u].empty()) throw Error(ErrorCode::InvalidArgument, "each type needs at least one stage");
    for (double e : p.eta[u]) {
      if (!(e > 0.0) || !std::isfinite(e)) throw Error(ErrorCode::NonPositiveRate, "stage rates must be positive");
    }
  }
  for (int n = 1; n <= n_max; ++n) {
    double s = 0.0;
    for (int l = 1; l <= n; ++l) {
      if (p.delta(l, n) < 0.0 || p.gamma(l, n) < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "gamma and delta must be nonnegative");
      }
      s += p.delta(l, n);
    }
    if (std::abs(s - 1.0) > 1e-9) throw Error(ErrorCode::InvalidDistribution, "delta(., n) must sum to one");
  }
}

using Slot = std::pair<int, int>;  // (type, stage)

State encode(const std::vector<Slot>& seq, int n_max) {
  State s(1 + 2 * static_cast<std::size_t>(n_max), 0);
  s[0] = static_cast<int>(seq.size());
  for (std::size_t l = 0; l < seq.size(); ++l) {
    s[1 + 2 * l] = seq[l].first;
    s[2 + 2 * l] = seq[l].second;
  }
  return s;
}

std::vector<Slot> decode(const State& s) {
  std::vector<Slot> seq(static_cast<std::size_t>(s[0]));
  for (std::size_t l = 0; l < seq.size(); ++l) seq[l] = {s[1 + 2 * l], s[2 + 2 * l]};
  return seq;
}

SpacePtr enumerate(const SymmetricQueueParams& p, int n_max) {
  std::vector<Slot> slots;
  for (std::size_t u = 0; u < p.type_count(); ++u) {
    for (int w = 1; w <= p.stages(u); ++w) slots.push_back({static_cast<int>(u), w});
  }
  double count = 0.0, layer = 1.0;
  for (int n = 0; n <= n_max; ++n) {
    count += layer;
    layer *= static_cast<double>(slots.size());
  }
  if (count > static_cast<double>(kMaxSymmetricStates)) {
    throw Error(ErrorCode::StateSpaceTooLarge, "symmetric queue would have " + std::to_string(count) + " states");
  }
  std::vector<State> states;
  states.reserve(static_cast<std::size_t>(count));
  std::vector<Slot> seq;
  std::function<void(int)> rec = [&](int remaining) {
    states.push_back(encode(seq, n_max));
    if (remaining == 0) return;
    for (const auto& s : slots) {
      seq.push_back(s);
      rec(remaining - 1);
      seq.pop_back();
    }
  };
  rec(n_max);
  return StateSpace::make(1 + 2 * static_cast<std::size_t>(n_max), std::move(states));
}

}  // namespace

ReactingSystemSpec symmetric_reacting_spec(const SymmetricQueueParams& params, int n_max) {
  validate(params, n_max);
  auto space = enumerate(params, n_max);
  const std::size_t types = params.type_count();
  std::vector<std::vector<Triplet>> arrivals(types), departures(types);
  std::vector<std::vector<double>> blocked(types, std::vector<double>(space->size(), 0.0));
  std::vector<Triplet> internal;
  for (std::size_t x = 0; x < space->size(); ++x) {
    const auto seq = decode(space->state(x));
    const int n = static_cast<int>(seq.size());
    for (std::size_t u = 0; u < types; ++u) {
      if (n == n_max) {
        blocked[u][x] = 1.0;
        continue;
      }
      // The arrival takes position i; customers formerly at i..n shift up by one.
      for (int i = 1; i <= n + 1; ++i) {
        const double p = params.delta(i, n + 1);
        if (p == 0.0) continue;
        auto next = seq;
        next.insert(next.begin() + (i - 1), Slot{static_cast<int>(u), params.stages(u)});
        arrivals[u].push_back({x, space->require_index(encode(next, n_max)), p});
      }
    }
    for (int i = 1; i <= n; ++i) {
      const auto [u, w] = seq[static_cast<std::size_t>(i - 1)];
      const double rate = params.gamma(i, n) * params.eta[static_cast<std::size_t>(u)][static_cast<std::size_t>(w - 1)];
      if (rate == 0.0) continue;
      auto next = seq;
      if (w == 1) {
        next.erase(next.begin() + (i - 1));
        departures[static_cast<std::size_t>(u)].push_back({x, space->require_index(encode(next, n_max)), rate});
      } else {
        next[static_cast<std::size_t>(i - 1)].second = w - 1;
        internal.push_back({x, space->require_index(encode(next, n_max)), rate});
      }
    }
  }
  ReactingSystemSpec spec;
  spec.space = space;
  for (std::size_t u = 0; u < types; ++u) {
    spec.types.push_back(std::to_string(u));
    spec.arrival_kernels.emplace_back(space, arrivals[u], blocked[u]);
    spec.departure_rates.emplace_back(space, departures[u]);
  }
  spec.internal = RateMatrix(space, internal);
  return spec;
}

Measure symmetric_closed_form(const SymmetricQueueParams& params, const SpacePtr& space) {
  std::vector<double> w(space->size());
  for (std::size_t x = 0; x < space->size(); ++x) {
    const auto seq = decode(space->state(x));
    double v = 1.0;
    for (std::size_t l = 0; l < seq.size(); ++l) {
      const auto [u, stage] = seq[l];
      v *= params.alpha[static_cast<std::size_t>(u)] /
           (params.phi(static_cast<int>(l) + 1) *
            params.eta[static_cast<std::size_t>(u)][static_cast<std::size_t>(stage - 1)]);
    }
    w[x] = v;
  }
  return Measure(space, std::move(w)).normalized();
}

QueueModel build_symmetric_queue(const SymmetricQueueParams& params, int n_max) {
  if (!check_symmetric(params, n_max)) {
    throw Error(ErrorCode::SymmetryViolated, "discipline '" + params.discipline + "' is not symmetric");
  }
  auto m = build_reacting_system(symmetric_reacting_spec(params, n_max), params.alpha);
  m.name = "symmetric";
  m.params["n_max"] = n_max;
  m.closed_form_pi = symmetric_closed_form(params, m.space);
  return m;
}

}  // namespace qrev
