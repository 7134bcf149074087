#include "qrev/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "qrev/error.hpp"
#include "qrev/kernels.hpp"

namespace qrev {

namespace {

int label_index(const std::vector<std::string>& labels, const std::string& label) {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw Error(ErrorCode::UnknownLabel, "unknown label '" + label + "'");
  return static_cast<int>(it - labels.begin());
}

std::string coords(const State& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0) out += ':';
    out += std::to_string(s[i]);
  }
  return out;
}

}  // namespace

std::string Trajectory::label_name(int label) const {
  return label == kUnlabeled ? std::string() : labels.at(static_cast<std::size_t>(label));
}

EventTable::EventTable(const QueueModel& model) : space_(model.space), labels_(model.family.labels()) {
  const auto& q = model.q;
  const std::size_t n = q.size();
  exit_ = kernels::row_sums(q);
  ptr_.assign(n + 1, 0);
  const auto& parts = model.family.parts();
  for (std::size_t x = 0; x < n; ++x) {
    std::map<std::size_t, double> labeled;
    double acc = 0.0;
    for (std::size_t l = 0; l < parts.size(); ++l) {
      auto cols = parts[l].row_cols(x);
      auto vals = parts[l].row_values(x);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        acc += vals[k];
        cum_.push_back(acc);
        target_.push_back(cols[k]);
        label_.push_back(static_cast<int>(l));
        labeled[cols[k]] += vals[k];
      }
    }
    auto cols = q.row_cols(x);
    auto vals = q.row_values(x);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double rest = vals[k] - labeled[cols[k]];
      if (rest > 1e-12 * vals[k]) {
        acc += rest;
        cum_.push_back(acc);
        target_.push_back(cols[k]);
        label_.push_back(kUnlabeled);
      }
    }
    exit_[x] = acc;
    ptr_[x + 1] = cum_.size();
  }
}

std::pair<std::size_t, int> EventTable::pick(std::size_t x, double u) const {
  const auto first = cum_.begin() + static_cast<std::ptrdiff_t>(ptr_[x]);
  const auto last = cum_.begin() + static_cast<std::ptrdiff_t>(ptr_[x + 1]);
  auto it = std::upper_bound(first, last, u * exit_[x]);
  if (it == last) --it;
  const auto k = static_cast<std::size_t>(it - cum_.begin());
  return {target_[k], label_[k]};
}

Trajectory simulate(const EventTable& table, std::size_t x0, const StopRule& stop, RngStream& rng,
                    double start_time) {
  if (!stop.horizon && !stop.events) throw Error(ErrorCode::InvalidArgument, "stop rule needs a horizon or a count");
  if (x0 >= table.space()->size()) throw Error(ErrorCode::InvalidArgument, "initial state outside the space");
  const int counted = stop.count_label.empty() ? kUnlabeled : label_index(table.labels(), stop.count_label);
  Trajectory traj;
  traj.space = table.space();
  traj.labels = table.labels();
  traj.initial = x0;
  traj.start = start_time;
  double t = start_time;
  std::size_t x = x0;
  std::size_t count = 0;
  while (true) {
    if (stop.events && count >= *stop.events) break;
    const double a = table.exit_rate(x);
    if (!(a > 0.0)) {
      throw Error(ErrorCode::AbsorbingStateReached, "state " + format_state(table.space()->state(x)) +
                                                        " has zero exit rate");
    }
    const double next = t + rng.exponential(a);
    if (stop.horizon && next > start_time + *stop.horizon) {
      t = start_time + *stop.horizon;
      break;
    }
    t = next;
    const auto [to, label] = table.pick(x, rng.uniform());
    traj.events.push_back({t, x, to, label});
    if (counted == kUnlabeled || label == counted) ++count;
    x = to;
  }
  traj.end = t;
  return traj;
}

Trajectory simulate(const QueueModel& model, std::size_t x0, const StopRule& stop, RngStream& rng) {
  return simulate(EventTable(model), x0, stop, rng);
}

std::size_t sample_state(const Measure& pi, RngStream& rng) {
  const double u = rng.uniform() * pi.total();
  double acc = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    acc += pi[i];
    if (u < acc) return i;
  }
  return pi.size() - 1;
}

std::vector<double> extract_counting(const Trajectory& traj, const std::string& label) {
  const int l = label_index(traj.labels, label);
  std::vector<double> out;
  for (const auto& e : traj.events) {
    if (e.label == l) out.push_back(e.time);
  }
  return out;
}

std::vector<double> gaps(const std::vector<double>& times, double start) {
  std::vector<double> out(times.size());
  double prev = start;
  for (std::size_t i = 0; i < times.size(); ++i) {
    out[i] = times[i] - prev;
    prev = times[i];
  }
  return out;
}

std::vector<double> occupancy_time(const Trajectory& traj) {
  std::vector<double> occ(traj.space->size(), 0.0);
  double t = traj.start;
  std::size_t x = traj.initial;
  for (const auto& e : traj.events) {
    occ[x] += e.time - t;
    t = e.time;
    x = e.to;
  }
  occ[x] += traj.end - t;
  const double span = traj.end - traj.start;
  if (span > 0.0) {
    for (auto& v : occ) v /= span;
  }
  return occ;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out.precision(17);
  out << "time,from,to,label\n";
  for (const auto& e : traj.events) {
    out << e.time << ',' << coords(traj.space->state(e.from)) << ',' << coords(traj.space->state(e.to)) << ','
        << traj.label_name(e.label) << '\n';
  }
}

BurkeReport burke_report(const QueueModel& model, const BurkeConfig& config) {
  const EventTable table(model);
  label_index(table.labels(), config.label);
  RngStream rng(config.seed, config.stream);
  BurkeReport rep;
  rep.seed = config.seed;
  rep.stream = config.stream;
  std::size_t x0 = config.x0;
  double t0 = 0.0;
  if (model.closed_form_pi) {
    x0 = sample_state(*model.closed_form_pi, rng);
    rep.warm_start = true;
  } else {
    const auto burn = config.horizon
                          ? simulate(table, x0, StopRule::at(0.1 * *config.horizon), rng)
                          : simulate(table, x0, StopRule::after(std::max<std::size_t>(config.departures / 10, 1), config.label), rng);
    x0 = burn.final_state();
    t0 = burn.end;
  }
  const auto stop = config.horizon ? StopRule::at(*config.horizon) : StopRule::after(config.departures, config.label);
  auto traj = simulate(table, x0, stop, rng, t0);
  const int l = label_index(traj.labels, config.label);
  std::vector<double> times, after;
  for (const auto& e : traj.events) {
    if (e.label != l) continue;
    times.push_back(e.time);
    after.push_back(static_cast<double>(traj.space->state(e.to).at(0)));
  }
  const auto g = gaps(times, t0);
  rep.count = times.size();
  rep.elapsed = traj.end - t0;
  rep.rate = static_cast<double>(rep.count) / rep.elapsed;
  const double half = 1.96 * std::sqrt(static_cast<double>(rep.count)) / rep.elapsed;
  rep.ci_low = rep.rate - half;
  rep.ci_high = rep.rate + half;
  const auto ks = ks_exponential(g);
  rep.ks_d = ks.d;
  rep.ks_p = ks.p;
  rep.lag1 = lag_autocorrelation(g, 1);
  rep.future_corr = correlation(g, after);
  rep.bound = 3.0 / std::sqrt(static_cast<double>(rep.count));
  if (config.keep_trajectory) rep.trajectory = std::move(traj);
  return rep;
}

std::vector<BurkeReport> burke_replications(const QueueModel& model, const BurkeConfig& config,
                                            std::size_t replications) {
  std::vector<BurkeReport> out(replications);
  std::vector<std::exception_ptr> errors(replications);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t r = 0; r < replications; ++r) {
    try {
      auto c = config;
      c.stream = r;
      out[r] = burke_report(model, c);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

OccupancyTest occupancy_test(const QueueModel& model, const Measure& pi, std::size_t samples, double spacing,
                             std::uint64_t seed, std::uint64_t stream) {
  if (pi.size() != model.q.size()) throw Error(ErrorCode::DimensionMismatch, "measure and model sizes differ");
  if (!(spacing > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample spacing must be positive");
  const EventTable table(model);
  RngStream rng(seed, stream);
  OccupancyTest out;
  out.counts.assign(pi.size(), 0.0);
  std::size_t x = sample_state(pi, rng);
  double t = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto seg = simulate(table, x, StopRule::at(spacing), rng, t);
    x = seg.final_state();
    t = seg.end;
    out.counts[x] += 1.0;
  }
  const auto p = pi.normalized();
  out.chi = chi_square_gof(out.counts, p.weights());
  return out;
}

}  // namespace qrev
