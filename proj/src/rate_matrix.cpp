#include "qrev/rate_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qrev/error.hpp"

namespace qrev {

RateMatrix::RateMatrix(SpacePtr space, const std::vector<Triplet>& entries,
                       std::vector<double> dropped)
    : space_(std::move(space)), dropped_(std::move(dropped)) {
  if (!space_) throw Error(ErrorCode::InvalidArgument, "rate matrix without a state space");
  const std::size_t n = space_->size();
  if (dropped_.empty()) dropped_.assign(n, 0.0);
  if (dropped_.size() != n) throw Error(ErrorCode::DimensionMismatch, "dropped mass size");

  std::vector<Triplet> sorted;
  sorted.reserve(entries.size());
  for (const auto& t : entries) {
    if (t.from >= n || t.to >= n) {
      throw Error(ErrorCode::DimensionMismatch, "rate entry refers to index outside the space");
    }
    if (!(t.value >= 0.0) || !std::isfinite(t.value)) {
      throw Error(ErrorCode::NonPositiveRate, "negative or non-finite rate");
    }
    if (t.value > 0.0) sorted.push_back(t);
  }
  std::sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
    return a.from != b.from ? a.from < b.from : a.to < b.to;
  });

  row_ptr_.assign(n + 1, 0);
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (k > 0 && sorted[k].from == sorted[k - 1].from && sorted[k].to == sorted[k - 1].to) {
      values_.back() += sorted[k].value;
      continue;
    }
    cols_.push_back(sorted[k].to);
    values_.push_back(sorted[k].value);
    ++row_ptr_[sorted[k].from + 1];
  }
  std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());

  t_ptr_.assign(n + 1, 0);
  for (std::size_t c : cols_) ++t_ptr_[c + 1];
  std::partial_sum(t_ptr_.begin(), t_ptr_.end(), t_ptr_.begin());
  t_rows_.resize(cols_.size());
  t_values_.resize(cols_.size());
  std::vector<std::size_t> fill(t_ptr_.begin(), t_ptr_.end() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const std::size_t slot = fill[cols_[k]]++;
      t_rows_[slot] = i;
      t_values_[slot] = values_[k];
    }
  }
}

double RateMatrix::operator()(std::size_t from, std::size_t to) const {
  auto c = row_cols(from);
  auto it = std::lower_bound(c.begin(), c.end(), to);
  if (it == c.end() || *it != to) return 0.0;
  return values_[row_ptr_[from] + static_cast<std::size_t>(it - c.begin())];
}

double RateMatrix::total_dropped() const {
  return std::accumulate(dropped_.begin(), dropped_.end(), 0.0);
}

std::vector<Triplet> RateMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      out.push_back({i, cols_[k], values_[k]});
    }
  }
  return out;
}

RateMatrix RateMatrix::scaled(double factor) const {
  auto t = triplets();
  for (auto& e : t) e.value *= factor;
  auto d = dropped_;
  for (auto& v : d) v *= factor;
  return RateMatrix(space_, t, std::move(d));
}

RateMatrix RateMatrix::without_self_loops() const {
  auto t = triplets();
  std::erase_if(t, [](const Triplet& e) { return e.from == e.to; });
  return RateMatrix(space_, t, dropped_);
}

bool RateMatrix::same_space(const RateMatrix& other) const {
  return space_ == other.space_ || (space_ && other.space_ && *space_ == *other.space_);
}

RateMatrix operator+(const RateMatrix& a, const RateMatrix& b) {
  if (!a.same_space(b)) throw Error(ErrorCode::DimensionMismatch, "adding rate matrices on different spaces");
  auto t = a.triplets();
  auto tb = b.triplets();
  t.insert(t.end(), tb.begin(), tb.end());
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.dropped()[i] + b.dropped()[i];
  return RateMatrix(a.space_ptr(), t, std::move(d));
}

namespace {

template <typename F>
double fold_diff(const RateMatrix& a, const RateMatrix& b, F&& metric) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "rate matrix sizes differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto ca = a.row_cols(i), cb = b.row_cols(i);
    auto va = a.row_values(i), vb = b.row_values(i);
    std::size_t p = 0, q = 0;
    while (p < ca.size() || q < cb.size()) {
      double x = 0.0, y = 0.0;
      if (q == cb.size() || (p < ca.size() && ca[p] < cb[q])) {
        x = va[p++];
      } else if (p == ca.size() || cb[q] < ca[p]) {
        y = vb[q++];
      } else {
        x = va[p++];
        y = vb[q++];
      }
      worst = std::max(worst, metric(x, y));
    }
  }
  return worst;
}

}  // namespace

double max_abs_diff(const RateMatrix& a, const RateMatrix& b) {
  return fold_diff(a, b, [](double x, double y) { return std::abs(x - y); });
}

double max_rel_diff(const RateMatrix& a, const RateMatrix& b) {
  return fold_diff(a, b, [](double x, double y) {
    const double scale = std::max(std::abs(x), std::abs(y));
    return scale == 0.0 ? 0.0 : std::abs(x - y) / scale;
  });
}

Measure::Measure(SpacePtr space, std::vector<double> weights, bool normalized)
    : space_(std::move(space)), weights_(std::move(weights)), normalized_(normalized) {
  if (!space_ || weights_.size() != space_->size()) {
    throw Error(ErrorCode::DimensionMismatch, "measure size does not match its space");
  }
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::InvalidArgument, "measure weights must be finite and nonnegative");
    }
  }
  if (normalized_ && std::abs(total() - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "normalized measure does not sum to one");
  }
}

double Measure::total() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

Measure Measure::normalized() const {
  const double s = total();
  if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "cannot normalize a zero measure");
  auto w = weights_;
  for (auto& v : w) v /= s;
  return Measure(space_, std::move(w), true);
}

Measure Measure::perturbed(std::size_t index, double factor) const {
  auto w = weights_;
  w.at(index) *= factor;
  return Measure(space_, std::move(w), false);
}

}  // namespace qrev
