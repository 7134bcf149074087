#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qrev/state_space.hpp"

namespace qrev {

struct Triplet {
  std::size_t from;
  std::size_t to;
  double value;
};

/// Sparse nonnegative transition rate function on a finite state space.
///
/// Self-loops q(x,x) >= 0 are ordinary entries: they contribute to the exit
/// rate a(x) but never change the state. Storage is CSR with a cached
/// transpose; duplicate triplets are summed and exact zeros are discarded.
/// Each row also carries the rate mass that was dropped because its target
/// fell outside the truncation box.
class RateMatrix {
 public:
  RateMatrix() = default;
  RateMatrix(SpacePtr space, const std::vector<Triplet>& entries,
             std::vector<double> dropped = {});

  static RateMatrix zero(SpacePtr space) { return RateMatrix(std::move(space), {}); }

  std::size_t size() const noexcept { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t nnz() const noexcept { return values_.size(); }
  const StateSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const noexcept { return space_; }

  double operator()(std::size_t from, std::size_t to) const;

  std::span<const std::size_t> row_cols(std::size_t i) const {
    return {cols_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  /// Sources x with q(x, j) > 0, ascending.
  std::span<const std::size_t> col_rows(std::size_t j) const {
    return {t_rows_.data() + t_ptr_[j], t_ptr_[j + 1] - t_ptr_[j]};
  }
  std::span<const double> col_values(std::size_t j) const {
    return {t_values_.data() + t_ptr_[j], t_ptr_[j + 1] - t_ptr_[j]};
  }

  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const std::size_t> cols() const noexcept { return cols_; }
  std::span<const double> values() const noexcept { return values_; }

  const std::vector<double>& dropped() const noexcept { return dropped_; }
  double total_dropped() const;

  std::vector<Triplet> triplets() const;
  RateMatrix scaled(double factor) const;
  /// Same entries with every self-loop removed.
  RateMatrix without_self_loops() const;

  bool same_space(const RateMatrix& other) const;

 private:
  SpacePtr space_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
  std::vector<std::size_t> t_ptr_;
  std::vector<std::size_t> t_rows_;
  std::vector<double> t_values_;
  std::vector<double> dropped_;
};

RateMatrix operator+(const RateMatrix& a, const RateMatrix& b);

/// max |a(x,x') - b(x,x')| over the union of supports.
double max_abs_diff(const RateMatrix& a, const RateMatrix& b);
/// Relative version: |a - b| / max(|a|, |b|) with 0/0 treated as 0.
double max_rel_diff(const RateMatrix& a, const RateMatrix& b);

/// Nonnegative weights on a state space (stationary distribution or measure,
/// reference or supporting measure).
class Measure {
 public:
  Measure() = default;
  Measure(SpacePtr space, std::vector<double> weights, bool normalized = false);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const noexcept { return weights_; }
  const StateSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const noexcept { return space_; }
  bool is_normalized() const noexcept { return normalized_; }

  double total() const;
  Measure normalized() const;
  /// Copy with weight at one state multiplied by `factor`, flagged unnormalized.
  Measure perturbed(std::size_t index, double factor) const;

 private:
  SpacePtr space_;
  std::vector<double> weights_;
  bool normalized_ = false;
};

}  // namespace qrev
