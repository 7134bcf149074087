// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qrev/balance.hpp"
#include "qrev/ctmc.hpp"
#include "qrev/kernels.hpp"
#include "qrev/models.hpp"
#include "qrev/network.hpp"
#include "qrev/reversal.hpp"
#include "qrev/self_reacting.hpp"
#include "qrev/sim.hpp"
#include "qrev/symmetric.hpp"

using namespace qrev;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel_gap(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

/// 200 random irreducible chains with 2..30 states, shared by criteria 3 and 4.
std::vector<RateMatrix> random_chains() {
  std::mt19937_64 rng(2024);
  std::vector<RateMatrix> out;
  for (int k = 0; k < 200; ++k) out.push_back(oracle::random_irreducible(2 + static_cast<std::size_t>(k) % 29, rng));
  return out;
}

Outcome mm1_closed_form() {
  const auto t0 = Clock::now();
  auto m = build_mm1(1.0, 2.0, 60);
  auto pi = stationary_distribution(m.q);
  double err = 0.0;
  for (std::size_t x = 0; x < pi.size(); ++x) err = std::max(err, std::abs(pi[x] - 0.5 * std::pow(0.5, static_cast<double>(x))));
  const double secs = seconds_since(t0);
  return {err < 1e-10 && secs < 1.0, fmt("max abs error %.2e, %.3f s", err, secs)};
}

Outcome detailed_balance_suite() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.2, 5.0);
  std::uniform_int_distribution<int> len(1, 50);
  std::vector<QueueModel> models{build_mm1(1.0, 2.0, 50), build_mms(1.0, 1.0, 2, 50)};
  for (int seed = 0; seed < 200; ++seed) {
    const int n = len(rng);
    std::vector<double> up(static_cast<std::size_t>(n)), down(static_cast<std::size_t>(n));
    for (auto& x : up) x = u(rng);
    for (auto& x : down) x = u(rng);
    models.push_back(build_birth_death(up, down));
  }
  double worst_db = 0.0, worst_measure = 0.0;
  bool all_reversible = true, all_consistent = true;
  for (const auto& m : models) {
    auto pi = stationary_distribution(m.q);
    worst_db = std::max(worst_db, detailed_balance_residual(m.q, pi));
    all_reversible = all_reversible && is_reversible(m.q, pi, 1e-12);
    auto rm = reversible_measure(m.q);
    if (!rm.consistent()) {
      all_consistent = false;
      continue;
    }
    auto bd = birth_death_measure(m.q);
    for (std::size_t x = 0; x < bd.size(); ++x) worst_measure = std::max(worst_measure, rel_gap((*rm.measure)[x], bd[x]));
  }
  const bool pass = all_reversible && all_consistent && worst_db < 1e-12 && worst_measure < 1e-12;
  return {pass, fmt("%zu chains, detailed balance residual %.2e, path-product vs birth-death %.2e (relative)", models.size(),
                    worst_db, worst_measure)};
}

Outcome reversal_algebra(const std::vector<RateMatrix>& chains) {
  double involution = 0.0, exit_gap = 0.0;
  int kelly_pass = 0, kelly_detects = 0;
  for (std::size_t k = 0; k < chains.size(); ++k) {
    const auto& q = chains[k];
    auto pi = stationary_distribution(q);
    auto rq = reverse(q, pi);
    involution = std::max(involution, max_rel_diff(reverse(rq, pi), q));
    kelly_pass += kelly_check(q, rq, pi).pass();
    auto bad = pi.perturbed(k % q.size(), 1.01);
    kelly_detects += !kelly_check(q, reverse(q, bad), bad).pass();
    auto a = exit_rates(q), at = exit_rates(rq);
    for (std::size_t i = 0; i < a.size(); ++i) exit_gap = std::max(exit_gap, rel_gap(a[i], at[i]));
  }
  const int n = static_cast<int>(chains.size());
  const bool pass = involution < 1e-14 && kelly_pass == n && kelly_detects == n && exit_gap < 1e-12;
  return {pass, fmt("involution %.2e, kelly pass %d/%d, perturbation caught %d/%d, exit-rate gap %.2e", involution,
                    kelly_pass, n, kelly_detects, n, exit_gap)};
}

Outcome self_loop_invariance(const std::vector<RateMatrix>& chains) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  double worst = 0.0;
  for (const auto& q : chains) {
    std::vector<Triplet> loops;
    for (std::size_t i = 0; i < q.size(); ++i) loops.push_back({i, i, u(rng)});
    auto looped = q + RateMatrix(q.space_ptr(), loops);
    auto a = stationary_distribution(q);
    auto b = stationary_distribution(looped);
    worst = std::max(worst, kernels::max_abs_distance(a.weights(), b.weights()));
  }
  return {worst < 1e-12, fmt("max change in pi %.2e over %zu chains", worst, chains.size())};
}

std::optional<std::map<std::string, double>> qr(const QueueModel& m) {
  return quasi_reversible(m.departures_by_type(), stationary_distribution(m.q), 1e-9, truncation_boundary(m.q));
}

Outcome quasi_discrimination() {
  auto b1 = qr(build_mm1(1.0, 2.0, 60));
  auto bs = qr(build_mms(2.0, 1.0, 3, 60));
  auto all = qr(build_batch_service_queue(1.0, 2.0, {0.5, 0.5}, BatchCounting::All, 60));
  auto full = qr(build_batch_service_queue(1.0, 2.0, {0.5, 0.5}, BatchCounting::FullBatches, 60));
  const double e1 = b1 ? std::abs(b1->at("") - 1.0) : 1.0;
  const double es = bs ? std::abs(bs->at("") - 2.0) : 1.0;
  const bool pass = b1 && bs && e1 < 1e-10 && es < 1e-10 && !all && full;
  return {pass, fmt("|beta-lambda| M/M/1 %.2e, M/M/3 %.2e; batch all-count %s, full-batch %s", e1, es,
                    all ? "accepted" : "rejected", full ? "accepted" : "rejected")};
}

Outcome checker_equivalence() {
  struct Case {
    const char* name;
    QueueModel m;
  };
  std::vector<Case> cases{
      {"M/M/1", build_mm1(1.0, 2.0, 60)},
      {"M/M/3", build_mms(2.0, 1.0, 3, 60)},
      {"symmetric", build_symmetric_queue(processor_sharing({0.3, 0.2}, {erlang_stages(2, 1.0), {2.0}}), 4)},
      {"batch all", build_batch_service_queue(1.0, 2.0, {0.5, 0.5}, BatchCounting::All, 60)},
      {"batch full", build_batch_service_queue(1.0, 2.0, {0.5, 0.5}, BatchCounting::FullBatches, 60)},
  };
  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    auto pi = stationary_distribution(c.m.q);
    auto b = truncation_boundary(c.m.q);
    const bool c2 = check_gamma_reversibility(c.m.family, pi, reacting_predicates(c.m.family, b)).pass;
    const bool c3 = quasi_reversibility(c.m.departures_by_type(), pi, 1e-9, b).holds;
    bool pb = true;
    for (const auto& [_, qd] : c.m.departures_by_type()) pb = pb && poisson_backward(qd, pi, 1e-9, b).has_value();
    pass = pass && c2 == c3 && c3 == pb;
    detail += fmt("%s%s %d%d%d", detail.empty() ? "" : ", ", c.name, c2, c3, pb);
  }
  return {pass, "verdicts (gamma, quasi, backward): " + detail};
}

Outcome symmetric_queue() {
  auto params = processor_sharing({0.3, 0.2}, {erlang_stages(2, 1.0), {1.5, 2.5}});
  auto m = build_symmetric_queue(params, 4);
  auto pi = stationary_distribution(m.q);
  const auto& cf = *m.closed_form_pi;
  double worst = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) worst = std::max(worst, std::abs(cf[i] - pi[i]) / pi[i]);
  const bool fcfs_rejected = !check_symmetric(fcfs(params.alpha, params.eta), 4);
  return {worst < 1e-8 && fcfs_rejected,
          fmt("%zu states, max relative error %.2e, FCFS %s", pi.size(), worst, fcfs_rejected ? "rejected" : "accepted")};
}

Outcome whittle_networks() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.3, 3.0);
  double worst_res = 0.0, worst_rr = 0.0;
  int equivalent = 0;
  for (int k = 0; k < 10; ++k) {
    std::vector<double> tphi(64), tpsi(64);
    for (auto& v : tphi) v = u(rng);
    for (auto& v : tpsi) v = u(rng);
    auto phi = [tphi](const State& x) { return tphi[static_cast<std::size_t>(x[0] * 8 + x[1])]; };
    auto psi = [tpsi](const State& x) { return tpsi[static_cast<std::size_t>(x[0] * 8 + x[1])]; };
    auto m = build_whittle(2, phi, psi, {u(rng), u(rng)}, {7, 7});
    const auto& cf = *m.model.closed_form_pi;
    worst_res = std::max(worst_res, stationary_residual(m.model.q, cf));
    auto r = check_routing_reversal(m, cf, 1e-10);
    worst_rr = std::max({worst_rr, r.departure_residual, r.invariance_residual});
    equivalent += r.departure_holds && r.reversed_invariant;
  }
  return {worst_res < 1e-10 && worst_rr < 1e-10 && equivalent == 10,
          fmt("stationary residual %.2e, departure/invariance residual %.2e, equivalence %d/10", worst_res, worst_rr,
              equivalent)};
}

Outcome jackson_product_form() {
  const auto t0 = Clock::now();
  auto tandem = verify_product_form(build_jackson({1.0, 0.0}, {2.0, 4.0}, {1, 1}, {{0.0, 1.0}, {0.0, 0.0}}, {39, 39}), 1e-6);
  auto fb = verify_product_form(build_jackson({1.0, 0.0}, {4.0, 4.0}, {1, 1}, {{0.5, 0.5}, {0.0, 0.0}}, {39, 39}), 1e-6);
  const double secs = seconds_since(t0);
  return {tandem.tv_distance < 1e-6 && fb.pass && tandem.pass && secs < 30.0,
          fmt("tandem tv %.2e, feedback tv %.2e, %.2f s", tandem.tv_distance, fb.tv_distance, secs)};
}

Outcome traffic_solver() {
  struct Case {
    std::vector<double> lambda, mu;
    std::vector<int> servers;
    std::vector<std::vector<double>> p;
    std::vector<int> bounds;
  };
  std::vector<Case> cases{
      {{1.0, 0.0}, {2.0, 4.0}, {1, 1}, {{0.0, 1.0}, {0.0, 0.0}}, {39, 39}},
      {{1.0, 0.0}, {4.0, 4.0}, {1, 1}, {{0.5, 0.5}, {0.0, 0.0}}, {39, 39}},
      {{1.0, 0.5, 0.2}, {4.0, 4.0, 3.0}, {1, 2, 1}, {{0.0, 0.5, 0.2}, {0.3, 0.0, 0.4}, {0.1, 0.1, 0.0}}, {30, 30, 30}},
  };
  double worst_alpha = 0.0, worst_beta = 0.0;
  for (const auto& c : cases) {
    auto t = solve_traffic(build_jackson(c.lambda, c.mu, c.servers, c.p, c.bounds));
    const std::size_t n = c.lambda.size();
    oracle::Dense a(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
      a[j][j] = 1.0;
      for (std::size_t i = 0; i < n; ++i) a[j][i] -= c.p[i][j];
    }
    auto ref = oracle::gauss_solve(a, c.lambda);
    for (std::size_t i = 0; i < n; ++i) {
      worst_alpha = std::max(worst_alpha, rel_gap(t.alpha[i + 1][0], ref[i]));
      worst_beta = std::max(worst_beta, rel_gap(t.alpha[i + 1][0], t.beta[i + 1][0]));
    }
  }
  return {worst_alpha < 1e-12 && worst_beta < 1e-12,
          fmt("alpha vs linear solve %.2e, |alpha - beta| %.2e", worst_alpha, worst_beta)};
}

Outcome burke_simulation() {
  const auto t0 = Clock::now();
  BurkeConfig c;
  c.seed = 42;
  auto r = burke_report(build_mm1(1.0, 2.0, 60), c);
  const double rate_err = std::abs(r.rate - 1.0);
  const bool mm1_ok = rate_err < 0.01 && r.ks_p > 0.01 && std::abs(r.lag1) < 3.0 / std::sqrt(static_cast<double>(r.count));
  auto batch = build_batch_service_queue(1.0, 2.0, {0.5, 0.5}, BatchCounting::All, 60);
  int flagged = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    c.seed = seed;
    flagged += !burke_report(batch, c).poisson();
  }
  const double secs = seconds_since(t0);
  return {mm1_ok && flagged >= 18 && secs < 60.0,
          fmt("M/M/1 rate error %.4f, KS p %.3f, lag-1 %.4f (bound %.4f); batch flagged %d/20; %.2f s", rate_err, r.ks_p,
              r.lag1, r.bound, flagged, secs)};
}

}  // namespace

int main() {
  const auto chains = random_chains();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"M/M/1 closed form", mm1_closed_form},
      {"detailed balance suite", detailed_balance_suite},
      {"reversal algebra", [&] { return reversal_algebra(chains); }},
      {"self-loop invariance", [&] { return self_loop_invariance(chains); }},
      {"quasi-reversibility discrimination", quasi_discrimination},
      {"departure checker equivalence", checker_equivalence},
      {"symmetric queue", symmetric_queue},
      {"Whittle networks", whittle_networks},
      {"Jackson product form", jackson_product_form},
      {"traffic solver", traffic_solver},
      {"Burke simulation", burke_simulation},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
  }
  return failed ? 1 : 0;
}
