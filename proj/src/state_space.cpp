#include "qrev/state_space.hpp"

#include <algorithm>
#include <numeric>

#include "qrev/error.hpp"

namespace qrev {

StateSpace::StateSpace(std::size_t dimension, std::vector<State> states,
                       std::optional<Truncation> truncation)
    : dimension_(dimension), states_(std::move(states)), truncation_(std::move(truncation)) {
  for (const auto& s : states_) {
    if (s.size() != dimension_) {
      throw Error(ErrorCode::DimensionMismatch,
                  "state " + format_state(s) + " does not have dimension " +
                      std::to_string(dimension_));
    }
    for (int c : s) {
      if (c < 0) throw Error(ErrorCode::InvalidArgument, "negative coordinate in " + format_state(s));
    }
  }
  std::sort(states_.begin(), states_.end());
  if (std::adjacent_find(states_.begin(), states_.end()) != states_.end()) {
    throw Error(ErrorCode::InvalidArgument, "duplicate state in enumeration");
  }
  if (truncation_) {
    if (truncation_->bounds.size() != dimension_) {
      throw Error(ErrorCode::DimensionMismatch, "truncation bounds do not match dimension");
    }
    for (const auto& s : states_) {
      for (std::size_t k = 0; k < dimension_; ++k) {
        if (s[k] > truncation_->bounds[k]) {
          throw Error(ErrorCode::InvalidArgument, "state " + format_state(s) + " outside bounds");
        }
      }
    }
  }
  for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(states_[i], i);
}

std::shared_ptr<const StateSpace> StateSpace::box(const std::vector<int>& bounds) {
  std::vector<State> states;
  State cur(bounds.size(), 0);
  for (int b : bounds) {
    if (b < 0) throw Error(ErrorCode::InvalidArgument, "negative truncation bound");
  }
  // Odometer with the last coordinate fastest, which is lexicographic order.
  while (true) {
    states.push_back(cur);
    auto k = static_cast<std::ptrdiff_t>(bounds.size()) - 1;
    while (k >= 0 && cur[k] == bounds[k]) {
      cur[k] = 0;
      --k;
    }
    if (k < 0) break;
    ++cur[k];
  }
  return std::make_shared<const StateSpace>(bounds.size(), std::move(states), Truncation{bounds});
}

std::shared_ptr<const StateSpace> StateSpace::line(int bound) { return box({bound}); }

std::shared_ptr<const StateSpace> StateSpace::simplex(const std::vector<int>& bounds,
                                                      int population) {
  auto full = box(bounds);
  std::vector<State> states;
  for (const auto& s : full->states()) {
    if (std::accumulate(s.begin(), s.end(), 0) == population) states.push_back(s);
  }
  if (states.empty()) throw Error(ErrorCode::InvalidArgument, "empty closed population space");
  return std::make_shared<const StateSpace>(bounds.size(), std::move(states), Truncation{bounds});
}

std::shared_ptr<const StateSpace> StateSpace::make(std::size_t dimension,
                                                   std::vector<State> states) {
  return std::make_shared<const StateSpace>(dimension, std::move(states));
}

std::optional<std::size_t> StateSpace::index_of(const State& s) const {
  auto it = index_.find(s);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t StateSpace::require_index(const State& s) const {
  auto idx = index_of(s);
  if (!idx) throw Error(ErrorCode::InvalidArgument, "state " + format_state(s) + " not in space");
  return *idx;
}

std::string format_state(const State& s) {
  std::string out = "(";
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k) out += ",";
    out += std::to_string(s[k]);
  }
  return out + ")";
}

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotIrreducible: return "NotIrreducible";
    case ErrorCode::SolverDidNotConverge: return "SolverDidNotConverge";
    case ErrorCode::UnsupportedState: return "UnsupportedState";
    case ErrorCode::NotStationary: return "NotStationary";
    case ErrorCode::NotStochastic: return "NotStochastic";
    case ErrorCode::NotBirthDeath: return "NotBirthDeath";
    case ErrorCode::ZeroDownRate: return "ZeroDownRate";
    case ErrorCode::UnreachableState: return "UnreachableState";
    case ErrorCode::OverlappingBlocks: return "OverlappingBlocks";
    case ErrorCode::NegativeFunctionValue: return "NegativeFunctionValue";
    case ErrorCode::ZeroWeightState: return "ZeroWeightState";
    case ErrorCode::NonPositiveRate: return "NonPositiveRate";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::SymmetryViolated: return "SymmetryViolated";
    case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::KernelNotStochastic: return "KernelNotStochastic";
    case ErrorCode::RoutingNotStochastic: return "RoutingNotStochastic";
    case ErrorCode::NoPositiveSolution: return "NoPositiveSolution";
    case ErrorCode::ZeroWeightType: return "ZeroWeightType";
    case ErrorCode::ZeroPhi: return "ZeroPhi";
    case ErrorCode::InternalBalanceViolated: return "InternalBalanceViolated";
    case ErrorCode::ArrivalConsistencyFailed: return "ArrivalConsistencyFailed";
    case ErrorCode::BatchSizeNotConserved: return "BatchSizeNotConserved";
    case ErrorCode::NodeNotQuasiReversible: return "NodeNotQuasiReversible";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ProductSpaceTooLarge: return "ProductSpaceTooLarge";
    case ErrorCode::BadRouting: return "BadRouting";
    case ErrorCode::AbsorbingStateReached: return "AbsorbingStateReached";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

}  // namespace qrev
