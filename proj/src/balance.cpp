#include "qrev/balance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <set>
#include <unordered_map>

#include "qrev/error.hpp"
#include "qrev/kernels.hpp"
#include "qrev/reversal.hpp"

namespace qrev {

namespace {

double scaled_gap(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

void require_same(const RateMatrix& q, const Measure& pi) {
  if (q.size() != pi.size()) throw Error(ErrorCode::DimensionMismatch, "measure and rate matrix sizes differ");
}

std::pair<double, bool> stationarity(const RateMatrix& q, const Measure& pi, double tol) {
  const double res = kernels::balance_residual(q, pi.weights());
  double scale = 1.0;
  const auto a = kernels::row_sums(q);
  for (std::size_t i = 0; i < q.size(); ++i) scale = std::max(scale, a[i] * pi[i]);
  return {res, res <= std::max(tol, 1e-9) * scale};
}

std::vector<double> weighted_inflow(const RateMatrix& g, const Measure& sigma) {
  std::vector<double> in(g.size(), 0.0);
  for (std::size_t x = 0; x < g.size(); ++x) {
    auto rows = g.col_rows(x);
    auto vals = g.col_values(x);
    for (std::size_t k = 0; k < rows.size(); ++k) in[x] += sigma[rows[k]] * vals[k];
  }
  return in;
}

bool skipped(const StateMask& boundary, std::size_t x) { return !boundary.empty() && boundary[x]; }

PoissonFit fit_against_sigma(const std::vector<double>& m, const Measure& sigma, const StateMask& boundary) {
  if (!boundary.empty() && boundary.size() != m.size()) {
    throw Error(ErrorCode::DimensionMismatch, "boundary mask has the wrong size");
  }
  double num = 0.0, den = 0.0, total = 0.0;
  for (std::size_t x = 0; x < m.size(); ++x) {
    if (skipped(boundary, x)) continue;
    num += sigma[x] * m[x];
    den += sigma[x] * sigma[x];
    total += sigma[x];
  }
  PoissonFit fit;
  if (den == 0.0) {
    fit.residual = std::numeric_limits<double>::infinity();
    return fit;
  }
  fit.rate = num / den;
  if (fit.rate <= 0.0) {
    fit.residual = std::numeric_limits<double>::infinity();
    return fit;
  }
  double worst = 0.0;
  for (std::size_t x = 0; x < m.size(); ++x) {
    if (!skipped(boundary, x)) worst = std::max(worst, std::abs(m[x] - fit.rate * sigma[x]));
  }
  fit.residual = worst / (fit.rate * total);
  return fit;
}

}  // namespace

PairPartition PairPartition::singletons(const RateMatrix& q) {
  std::set<StatePair> pairs;
  for (std::size_t x = 0; x < q.size(); ++x) {
    for (std::size_t y : q.row_cols(x)) {
      pairs.insert({x, y});
      pairs.insert({y, x});
    }
  }
  PairPartition p;
  for (const auto& pr : pairs) p.blocks.push_back({pr});
  return p;
}

PairPartition PairPartition::whole(const RateMatrix& q) {
  PairPartition p;
  p.blocks.emplace_back();
  for (auto& b : singletons(q).blocks) p.blocks[0].push_back(b[0]);
  return p;
}

bool LocalBalanceReport::all_pass() const {
  return std::all_of(blocks.begin(), blocks.end(), [](const BlockVerdict& b) { return b.pass; });
}

LocalBalanceReport check_local_balance(const RateMatrix& q, const Measure& pi, const PairPartition& w,
                                       double tol) {
  require_same(q, pi);
  std::set<StatePair> seen;
  LocalBalanceReport report;
  std::tie(report.stationary_residual, report.pi_stationary) = stationarity(q, pi, tol);
  for (const auto& block : w.blocks) {
    BlockVerdict v;
    for (const auto& [x, y] : block) {
      if (x >= q.size() || y >= q.size()) throw Error(ErrorCode::DimensionMismatch, "pair outside the state space");
      if (!seen.insert({x, y}).second) {
        throw Error(ErrorCode::OverlappingBlocks, "pair (" + std::to_string(x) + "," + std::to_string(y) +
                                                      ") appears in two blocks");
      }
      v.outflow += pi[x] * q(x, y);
      v.inflow += pi[y] * q(y, x);
    }
    v.residual = scaled_gap(v.outflow, v.inflow);
    v.pass = v.residual <= tol;
    report.blocks.push_back(v);
  }
  return report;
}

TestFunction block_indicator(const std::vector<StatePair>& block) {
  auto members = std::make_shared<const std::set<StatePair>>(block.begin(), block.end());
  return [members](std::size_t x, std::size_t y) { return members->count({x, y}) ? 1.0 : 0.0; };
}

LocalBalanceReport check_test_function_balance(const RateMatrix& q, const Measure& pi, const TestFunctionSet& g,
                                               double tol) {
  require_same(q, pi);
  LocalBalanceReport report;
  std::tie(report.stationary_residual, report.pi_stationary) = stationarity(q, pi, tol);
  for (const auto& f : g.functions) {
    BlockVerdict v;
    for (std::size_t x = 0; x < q.size(); ++x) {
      auto cols = q.row_cols(x);
      auto vals = q.row_values(x);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const std::size_t y = cols[k];
        const double fxy = f(x, y);
        const double fyx = f(y, x);
        if (fxy < 0.0 || fyx < 0.0) {
          throw Error(ErrorCode::NegativeFunctionValue, "test function is negative on a supported pair");
        }
        const double flow = pi[x] * vals[k];
        v.outflow += flow * fxy;  // pi(x) q(x,y) f(x,y)
        v.inflow += flow * fyx;   // the same flow seen as pi(x') q(x',x) f(x,x') with x = y, x' = x
      }
    }
    v.residual = scaled_gap(v.outflow, v.inflow);
    v.pass = v.residual <= tol;
    report.blocks.push_back(v);
  }
  return report;
}

SubTransitionFamily::SubTransitionFamily(RateMatrix parent, std::vector<std::string> labels,
                                         std::vector<RateMatrix> parts,
                                         const std::map<std::string, std::string>& gamma)
    : parent_(std::move(parent)), labels_(std::move(labels)), parts_(std::move(parts)) {
  if (labels_.size() != parts_.size()) throw Error(ErrorCode::DimensionMismatch, "one part per label required");
  std::set<std::string> unique(labels_.begin(), labels_.end());
  if (unique.size() != labels_.size()) throw Error(ErrorCode::InvalidArgument, "duplicate family label");
  for (const auto& p : parts_) {
    if (p.size() != parent_.size()) throw Error(ErrorCode::DimensionMismatch, "part and parent sizes differ");
  }
  gamma_.resize(labels_.size());
  for (std::size_t u = 0; u < labels_.size(); ++u) gamma_[u] = u;
  for (const auto& [from, to] : gamma) {
    auto a = find(from);
    auto b = find(to);
    if (!a || !b) throw Error(ErrorCode::UnknownLabel, "gamma refers to unknown label " + (a ? to : from));
    gamma_[*a] = *b;
  }
  gamma_inv_.assign(labels_.size(), labels_.size());
  for (std::size_t u = 0; u < labels_.size(); ++u) {
    if (gamma_inv_[gamma_[u]] != labels_.size()) {
      throw Error(ErrorCode::InvalidArgument, "gamma is not a bijection on the labels");
    }
    gamma_inv_[gamma_[u]] = u;
  }
}

std::optional<std::size_t> SubTransitionFamily::find(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

std::size_t SubTransitionFamily::require(const std::string& label) const {
  auto u = find(label);
  if (!u) throw Error(ErrorCode::UnknownLabel, "no family part labeled " + label);
  return *u;
}

RateMatrix SubTransitionFamily::unlabeled(double tol) const {
  const std::size_t n = parent_.size();
  std::unordered_map<std::size_t, double> rest;
  for (const auto& t : parent_.triplets()) rest[t.from * n + t.to] += t.value;
  for (const auto& p : parts_) {
    for (const auto& t : p.triplets()) rest[t.from * n + t.to] -= t.value;
  }
  std::vector<Triplet> out;
  for (const auto& [key, v] : rest) {
    const std::size_t from = key / n, to = key % n;
    if (v > tol * std::max(1.0, parent_(from, to))) out.push_back({from, to, v});
  }
  return RateMatrix(parent_.space_ptr(), out);
}

std::vector<std::vector<std::string>> SubTransitionFamily::orbits() const {
  std::vector<char> seen(labels_.size(), 0);
  std::vector<std::vector<std::string>> out;
  for (std::size_t u = 0; u < labels_.size(); ++u) {
    if (seen[u]) continue;
    std::vector<std::string> orbit;
    for (std::size_t v = u; !seen[v]; v = gamma_[v]) {
      seen[v] = 1;
      orbit.push_back(labels_[v]);
    }
    out.push_back(std::move(orbit));
  }
  return out;
}

FamilyVerdict validate_family(const SubTransitionFamily& fam, double tol) {
  const auto& q = fam.parent();
  const std::size_t n = q.size();
  std::unordered_map<std::size_t, double> covered;
  for (const auto& p : fam.parts()) {
    for (const auto& t : p.triplets()) covered[t.from * n + t.to] += t.value;
  }
  FamilyVerdict v;
  double covered_total = 0.0;
  for (const auto& [key, s] : covered) {
    const std::size_t from = key / n, to = key % n;
    const double parent = q(from, to);
    covered_total += s;
    const double excess = (s - parent) / std::max(1.0, parent);
    if (excess > v.worst_excess) {
      v.worst_excess = excess;
      v.from = from;
      v.to = to;
    }
  }
  double parent_total = 0.0;
  for (double x : q.values()) parent_total += x;
  v.min_slack = std::max(0.0, parent_total - covered_total);
  v.pass = v.worst_excess <= tol;
  return v;
}

std::vector<RateMatrix> gamma_reverse(const SubTransitionFamily& fam, const Measure& pi) {
  std::vector<RateMatrix> out;
  out.reserve(fam.label_count());
  for (std::size_t u = 0; u < fam.label_count(); ++u) {
    out.push_back(reverse(fam.parts()[fam.gamma_inverse(u)], pi));
  }
  return out;
}

PoissonFit fit_departure_rate(const RateMatrix& g, const Measure& sigma, const StateMask& boundary) {
  require_same(g, sigma);
  auto in = weighted_inflow(g, sigma);
  for (std::size_t x = 0; x < g.size(); ++x) {
    if (sigma[x] == 0.0 && in[x] > 0.0) {
      throw Error(ErrorCode::ZeroWeightState,
                  "state " + format_state(g.space().state(x)) + " has zero weight but positive inflow");
    }
  }
  return fit_against_sigma(in, sigma, boundary);
}

PoissonFit fit_arrival_rate(const RateMatrix& g, const Measure& sigma, const StateMask& boundary) {
  require_same(g, sigma);
  auto rows = kernels::row_sums(g);
  for (std::size_t x = 0; x < g.size(); ++x) rows[x] *= sigma[x];
  return fit_against_sigma(rows, sigma, boundary);
}

MembershipPredicate q_a_predicate(StateMask boundary) {
  return {"Q_a", [boundary = std::move(boundary)](const RateMatrix& g, const Measure& s, double tol) {
            return fit_arrival_rate(g, s, boundary).ok(tol);
          }};
}

MembershipPredicate q_d_predicate(StateMask boundary) {
  return {"Q_d", [boundary = std::move(boundary)](const RateMatrix& g, const Measure& s, double tol) {
            return fit_departure_rate(g, s, boundary).ok(tol);
          }};
}

StateMask truncation_boundary(const RateMatrix& q) {
  StateMask mask(q.size(), 0);
  for (std::size_t x = 0; x < q.dropped().size(); ++x) mask[x] = q.dropped()[x] > 0.0;
  return mask;
}

std::map<std::string, MembershipPredicate> reacting_predicates(const SubTransitionFamily& fam,
                                                               const StateMask& boundary) {
  std::map<std::string, MembershipPredicate> out;
  for (const auto& label : fam.labels()) {
    if (label.empty()) continue;
    if (label[0] == 'a') out.emplace(label, q_a_predicate(boundary));
    if (label[0] == 'd') out.emplace(label, q_d_predicate(boundary));
  }
  return out;
}

GammaReport check_gamma_reversibility(const SubTransitionFamily& fam, const Measure& pi,
                                      const std::map<std::string, MembershipPredicate>& preds, double tol) {
  const auto reversed = gamma_reverse(fam, pi);
  GammaReport report;
  report.orbits = fam.orbits();
  for (std::size_t u = 0; u < fam.label_count(); ++u) {
    LabelVerdict v;
    v.label = fam.labels()[u];
    auto it = preds.find(v.label);
    if (it != preds.end()) {
      v.has_predicate = true;
      v.member_forward = it->second.test(fam.parts()[u], pi, tol);
      v.member_reversed = it->second.test(reversed[u], pi, tol);
      v.ok = !v.member_forward || v.member_reversed;
    }
    if (!v.ok) {
      report.pass = false;
      report.failed_at.push_back(fam.labels()[fam.gamma_inverse(u)]);
    }
    report.labels.push_back(std::move(v));
  }
  return report;
}

std::optional<double> poisson_forward(const RateMatrix& q_star, double tol) {
  const auto rows = kernels::row_sums(q_star);
  if (rows.empty()) return std::nullopt;
  const auto [lo, hi] = std::minmax_element(rows.begin(), rows.end());
  if (*lo <= 0.0 || *hi / *lo > 1.0 + tol) return std::nullopt;
  double mean = 0.0;
  for (double r : rows) mean += r;
  return mean / static_cast<double>(rows.size());
}

std::optional<double> poisson_backward(const RateMatrix& q_star, const Measure& pi, double tol,
                                       const StateMask& boundary) {
  const auto fit = fit_departure_rate(q_star, pi, boundary);
  if (!fit.ok(tol)) return std::nullopt;
  return fit.rate;
}

QuasiReversibility quasi_reversibility(const std::map<std::string, RateMatrix>& q_d_by_type, const Measure& pi,
                                       double tol, const StateMask& boundary) {
  QuasiReversibility out;
  out.holds = !q_d_by_type.empty();
  for (const auto& [type, qd] : q_d_by_type) {
    auto fit = fit_departure_rate(qd, pi, boundary);
    out.holds = out.holds && fit.ok(tol);
    out.fits.emplace(type, fit);
  }
  return out;
}

std::optional<std::map<std::string, double>> quasi_reversible(
    const std::map<std::string, RateMatrix>& q_d_by_type, const Measure& pi, double tol,
    const StateMask& boundary) {
  auto qr = quasi_reversibility(q_d_by_type, pi, tol, boundary);
  if (!qr.holds) return std::nullopt;
  std::map<std::string, double> out;
  for (const auto& [type, fit] : qr.fits) out.emplace(type, fit.rate);
  return out;
}

}  // namespace qrev
