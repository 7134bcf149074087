#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qrev/models.hpp"
#include "qrev/rng.hpp"
#include "qrev/stats.hpp"

namespace qrev {

constexpr int kUnlabeled = -1;

struct Event {
  double time;
  std::size_t from;
  std::size_t to;
  int label;  // index into Trajectory::labels or kUnlabeled
};

struct Trajectory {
  SpacePtr space;
  std::vector<std::string> labels;
  std::size_t initial = 0;
  double start = 0.0;
  double end = 0.0;  // horizon reached, or the time of the last event
  std::vector<Event> events;

  std::string label_name(int label) const;
  std::size_t final_state() const { return events.empty() ? initial : events.back().to; }
};

/// Stop at a time horizon, or after `events` events; with `count_label` set,
/// only events carrying that label are counted.
struct StopRule {
  std::optional<double> horizon;
  std::optional<std::size_t> events;
  std::string count_label;

  static StopRule at(double horizon) { return {horizon, std::nullopt, {}}; }
  static StopRule after(std::size_t n, std::string label = {}) { return {std::nullopt, n, std::move(label)}; }
};

/// Competing-exponential sampler: each row is split into labeled segments
/// taken from the family parts, plus an unlabeled residual (self-loops
/// included).
class EventTable {
 public:
  explicit EventTable(const QueueModel& model);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const SpacePtr& space() const noexcept { return space_; }
  double exit_rate(std::size_t x) const { return exit_[x]; }
  /// Segment chosen by a uniform draw u in (0, 1); returns (target, label).
  std::pair<std::size_t, int> pick(std::size_t x, double u) const;

 private:
  SpacePtr space_;
  std::vector<std::string> labels_;
  std::vector<double> exit_;
  std::vector<std::size_t> ptr_;
  std::vector<double> cum_;
  std::vector<std::size_t> target_;
  std::vector<int> label_;
};

/// Throws AbsorbingStateReached on a state with zero exit rate and
/// UnknownLabel when the stop rule counts a label the model does not have.
Trajectory simulate(const EventTable& table, std::size_t x0, const StopRule& stop, RngStream& rng,
                    double start_time = 0.0);
Trajectory simulate(const QueueModel& model, std::size_t x0, const StopRule& stop, RngStream& rng);

std::size_t sample_state(const Measure& pi, RngStream& rng);

/// Ordered times of the events carrying `label`. Throws UnknownLabel.
std::vector<double> extract_counting(const Trajectory& traj, const std::string& label);

/// Gaps between consecutive times, the first measured from `start`.
std::vector<double> gaps(const std::vector<double>& times, double start);

/// Fraction of [start, end] spent in each state.
std::vector<double> occupancy_time(const Trajectory& traj);

/// CSV with columns time,from,to,label; state coordinates joined with ':'.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

struct BurkeConfig {
  std::string label = "d";
  std::size_t departures = 100000;
  std::uint64_t seed = 42;
  std::uint64_t stream = 0;
  std::size_t x0 = 0;  // used only without a closed-form start
  std::optional<double> horizon;  // replaces the event count when set
  bool keep_trajectory = false;
};

struct BurkeReport {
  std::size_t count = 0;
  double elapsed = 0.0;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double ks_d = 0.0;
  double ks_p = 0.0;
  double lag1 = 0.0;
  double future_corr = 0.0;  // gap against the first coordinate just after the event ending it
  double bound = 0.0;        // 3 / sqrt(count)
  bool warm_start = false;   // started from the closed-form measure rather than a burn-in
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::optional<Trajectory> trajectory;

  bool ks_pass(double level = 0.01) const { return ks_p > level; }
  bool lag_pass() const { return std::abs(lag1) < bound; }
  bool future_pass() const { return std::abs(future_corr) < bound; }
  bool poisson(double level = 0.01) const { return ks_pass(level) && lag_pass(); }
};

/// Warm start from closed_form_pi when present, otherwise a burn-in of one
/// tenth of the requested event count from state x0.
BurkeReport burke_report(const QueueModel& model, const BurkeConfig& config);

/// Replications on streams 0..R-1 under config.seed, run concurrently.
std::vector<BurkeReport> burke_replications(const QueueModel& model, const BurkeConfig& config, std::size_t replications);

struct OccupancyTest {
  std::vector<double> counts;
  ChiSquareResult chi;
};

/// States sampled every `spacing` time units from a stationary start and
/// compared with pi by a chi-square test.
OccupancyTest occupancy_test(const QueueModel& model, const Measure& pi, std::size_t samples, double spacing,
                             std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace qrev
