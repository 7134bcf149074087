#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "qrev/ctmc.hpp"
#include "qrev/error.hpp"
#include "qrev/sim.hpp"

using namespace qrev;

TEST_CASE("trajectory structure") {
  auto m = build_mm1(1.0, 2.0, 20);
  RngStream rng(5, 0);
  auto t = simulate(m, 0, StopRule::after(5000), rng);
  REQUIRE(t.events.size() == 5000);
  std::size_t at = t.initial;
  double last = t.start;
  for (const auto& e : t.events) {
    CHECK(e.time > last);
    CHECK(e.from == at);
    if (e.label != kUnlabeled) CHECK(m.family.parts()[static_cast<std::size_t>(e.label)](e.from, e.to) > 0.0);
    last = e.time;
    at = e.to;
  }
  CHECK(t.final_state() == at);

  RngStream r2(6, 0);
  auto h = simulate(m, 0, StopRule::at(100.0), r2);
  CHECK(h.end == 100.0);
  CHECK(h.events.back().time <= 100.0);
}

TEST_CASE("self-loops are simulated and recorded") {
  auto m = build_mm1(5.0, 1.0, 2);
  RngStream rng(8, 0);
  auto t = simulate(m, 2, StopRule::after(2000), rng);
  std::size_t loops = 0;
  for (const auto& e : t.events) loops += e.from == e.to;
  CHECK(loops > 100);
  // Blocked arrivals still carry the arrival label.
  for (const auto& e : t.events)
    if (e.from == e.to) CHECK(t.label_name(e.label) == "a");
}

TEST_CASE("determinism") {
  auto m = build_mms(2.0, 1.0, 3, 30);
  RngStream a(99, 4), b(99, 4);
  auto ta = simulate(m, 0, StopRule::after(3000), a);
  auto tb = simulate(m, 0, StopRule::after(3000), b);
  REQUIRE(ta.events.size() == tb.events.size());
  bool same = true;
  for (std::size_t i = 0; i < ta.events.size(); ++i) {
    same = same && ta.events[i].time == tb.events[i].time && ta.events[i].to == tb.events[i].to &&
           ta.events[i].label == tb.events[i].label;
  }
  CHECK(same);
}

TEST_CASE("absorbing states and unknown labels") {
  QueueModel m;
  m.space = StateSpace::line(0);
  m.q = RateMatrix(m.space, {});
  m.family = SubTransitionFamily(m.q, {}, {});
  RngStream rng(1, 0);
  CHECK_THROWS_AS(simulate(m, 0, StopRule::after(1), rng), Error);

  auto mm = build_mm1(1.0, 2.0, 5);
  CHECK_THROWS_AS(simulate(mm, 0, StopRule::after(10, "zz"), rng), Error);
  auto t = simulate(mm, 0, StopRule::after(10), rng);
  CHECK_THROWS_AS(extract_counting(t, "zz"), Error);
}

TEST_CASE("counting processes") {
  auto m = build_mm1(1.0, 2.0, 60);
  RngStream rng(11, 0);
  const std::size_t x0 = sample_state(*m.closed_form_pi, rng);
  auto t = simulate(m, x0, StopRule::at(50000.0), rng);
  const double span = t.end - t.start;
  for (const char* l : {"a", "d"}) {
    const auto times = extract_counting(t, l);
    const double rate = static_cast<double>(times.size()) / span;
    // The labeled event rate is sum_x pi(x) times the row sum of q_l at x.
    double expect = 0.0;
    const auto& part = m.family.part(l);
    for (std::size_t x = 0; x < part.size(); ++x) {
      double row = 0.0;
      for (double v : part.row_values(x)) row += v;
      expect += (*m.closed_form_pi)[x] * row;
    }
    CHECK(std::abs(rate - expect) < 3.0 * std::sqrt(expect / span));
  }
  auto g = gaps({1.0, 1.5, 4.0}, 0.5);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == doctest::Approx(0.5));
  CHECK(g[2] == doctest::Approx(2.5));

  auto quiet = build_mm1(1.0, 2.0, 5);
  auto tq = simulate(quiet, 0, StopRule::after(0), rng);
  CHECK(extract_counting(tq, "d").empty());
}

TEST_CASE("occupancy matches the closed form") {
  auto m = build_mm1(1.0, 2.0, 60);
  auto o = occupancy_test(m, *m.closed_form_pi, 20000, 50.0, 7);
  CHECK(o.chi.p > 0.001);

  RngStream rng(3, 0);
  auto t = simulate(m, 0, StopRule::at(20000.0), rng);
  auto occ = occupancy_time(t);
  double total = 0.0;
  for (double v : occ) total += v;
  CHECK(total == doctest::Approx(1.0));
  CHECK(occ[0] == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("burke report on M/M/1 and M/M/s") {
  auto r = burke_report(build_mm1(1.0, 2.0, 60), {});
  CHECK(r.warm_start);
  CHECK(r.count == 100000);
  CHECK(r.rate > 0.99);
  CHECK(r.rate < 1.01);
  CHECK(r.ci_low < 1.0);
  CHECK(r.ci_high > 1.0);
  CHECK(r.ks_p > 0.01);
  CHECK(r.lag_pass());
  CHECK(r.future_pass());

  BurkeConfig c;
  c.departures = 50000;
  auto s = burke_report(build_mms(2.0, 1.5, 3, 60), c);
  CHECK(s.poisson());
  CHECK(s.future_pass());
  CHECK(s.rate == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("burke report flags batch departures") {
  auto b = build_batch_service_queue(1.0, 2.0, {0.5, 0.5}, BatchCounting::All, 60);
  BurkeConfig c;
  c.departures = 20000;
  auto reps = burke_replications(b, c, 4);
  REQUIRE(reps.size() == 4);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    CHECK(reps[i].stream == i);
    CHECK_FALSE(reps[i].poisson());
  }
  // Replications match individually run streams.
  c.stream = 2;
  auto solo = burke_report(b, c);
  CHECK(solo.ks_d == reps[2].ks_d);
}

TEST_CASE("burn-in without a closed form") {
  auto b = build_batch_service_queue(1.0, 2.0, {0.5, 0.5}, BatchCounting::FullBatches, 40);
  b.closed_form_pi.reset();
  BurkeConfig c;
  c.departures = 5000;
  auto r = burke_report(b, c);
  CHECK_FALSE(r.warm_start);
  CHECK(r.count == 5000);
}

TEST_CASE("trajectory CSV") {
  auto m = build_mm1(1.0, 2.0, 5);
  RngStream rng(2, 0);
  auto t = simulate(m, 0, StopRule::after(20), rng);
  const auto path = (std::filesystem::temp_directory_path() / "qrev_traj_test.csv").string();
  write_trajectory_csv(t, path);
  std::ifstream f(path);
  std::string header;
  std::getline(f, header);
  CHECK(header == "time,from,to,label");
  std::size_t lines = 0;
  for (std::string l; std::getline(f, l);) ++lines;
  CHECK(lines == 20);
  std::filesystem::remove(path);
}
