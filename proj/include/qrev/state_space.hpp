#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qrev {

using State = std::vector<int>;

/// Box bounds per coordinate; transitions whose target leaves the box are
/// dropped and their rate recorded as leaked mass by the builders.
struct Truncation {
  std::vector<int> bounds;
};

/// Finite enumeration of states with a dense index. States are kept in
/// lexicographic order of their coordinates, so two spaces built from the same
/// set of states always agree on the index of every state.
class StateSpace {
 public:
  StateSpace(std::size_t dimension, std::vector<State> states,
             std::optional<Truncation> truncation = std::nullopt);

  /// All lattice points of [0, bounds[0]] x ... x [0, bounds[d-1]].
  static std::shared_ptr<const StateSpace> box(const std::vector<int>& bounds);
  /// One-dimensional space {0, 1, ..., bound}.
  static std::shared_ptr<const StateSpace> line(int bound);
  /// Lattice points of the box with coordinate sum equal to `population`.
  static std::shared_ptr<const StateSpace> simplex(const std::vector<int>& bounds,
                                                   int population);
  static std::shared_ptr<const StateSpace> make(std::size_t dimension,
                                                std::vector<State> states);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return states_.size(); }
  const State& state(std::size_t index) const { return states_.at(index); }
  const std::vector<State>& states() const noexcept { return states_; }
  const std::optional<Truncation>& truncation() const noexcept { return truncation_; }

  std::optional<std::size_t> index_of(const State& s) const;
  std::size_t require_index(const State& s) const;
  bool contains(const State& s) const { return index_of(s).has_value(); }

  bool operator==(const StateSpace& other) const {
    return dimension_ == other.dimension_ && states_ == other.states_;
  }

 private:
  std::size_t dimension_;
  std::vector<State> states_;
  std::map<State, std::size_t> index_;
  std::optional<Truncation> truncation_;
};

using SpacePtr = std::shared_ptr<const StateSpace>;

std::string format_state(const State& s);

}  // namespace qrev
