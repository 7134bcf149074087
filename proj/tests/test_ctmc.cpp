#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qrev/ctmc.hpp"
#include "qrev/error.hpp"

using namespace qrev;

namespace {

RateMatrix mm1(double lambda, double mu, int bound) {
  auto space = StateSpace::line(bound);
  std::vector<Triplet> t;
  for (int x = 0; x < bound; ++x) {
    t.push_back({std::size_t(x), std::size_t(x + 1), lambda});
    t.push_back({std::size_t(x + 1), std::size_t(x), mu});
  }
  return RateMatrix(space, t);
}

}  // namespace

TEST_CASE("state space enumeration") {
  auto box = StateSpace::box({2, 1});
  CHECK(box->size() == 6);
  CHECK(box->state(0) == State{0, 0});
  CHECK(box->state(1) == State{0, 1});
  CHECK(box->state(5) == State{2, 1});
  for (std::size_t i = 0; i < box->size(); ++i) CHECK(box->require_index(box->state(i)) == i);
  CHECK_FALSE(box->contains({3, 0}));

  auto simplex = StateSpace::simplex({3, 3}, 3);
  CHECK(simplex->size() == 4);

  CHECK_THROWS_AS(StateSpace(1, {{0}, {0}}), Error);
  CHECK_THROWS_AS(StateSpace(2, {{0}}), Error);
  CHECK_THROWS_AS(StateSpace(1, {{-1}}), Error);
}

TEST_CASE("rate matrix storage") {
  auto space = StateSpace::line(2);
  RateMatrix q(space, {{0, 1, 1.0}, {0, 1, 2.0}, {1, 1, 0.5}, {2, 0, 0.0}});
  CHECK(q(0, 1) == 3.0);
  CHECK(q(1, 1) == 0.5);
  CHECK(q(2, 0) == 0.0);
  CHECK(q.nnz() == 2);
  CHECK_THROWS_AS(RateMatrix(space, {{0, 1, -1.0}}), Error);
  CHECK_THROWS_AS(RateMatrix(space, {{0, 3, 1.0}}), Error);
}

TEST_CASE("exit rates count self-loops") {
  auto q = mm1(1.0, 2.0, 10);
  auto a = exit_rates(q);
  CHECK(a[0] == doctest::Approx(1.0));
  CHECK(a[5] == doctest::Approx(3.0));
  auto with_loop = q + RateMatrix(q.space_ptr(), {{0, 0, 5.0}});
  CHECK(exit_rates(with_loop)[0] == doctest::Approx(6.0));
  RateMatrix empty = RateMatrix::zero(StateSpace::line(1));
  CHECK(exit_rates(empty)[1] == 0.0);
}

TEST_CASE("irreducibility") {
  CHECK(is_irreducible(mm1(1.0, 2.0, 10)));
  auto space = StateSpace::line(3);
  CHECK_FALSE(is_irreducible(RateMatrix(space, {{0, 1, 1}, {1, 0, 1}, {2, 3, 1}, {3, 2, 1}})));
  CHECK_FALSE(is_irreducible(RateMatrix(space, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {1, 0, 1}, {2, 1, 1}})));
  CHECK_THROWS_AS(stationary_distribution(RateMatrix(space, {{0, 1, 1}, {1, 0, 1}})), Error);
}

TEST_CASE("stationary distribution: M/M/1 closed form") {
  auto q = mm1(1.0, 2.0, 60);
  auto sol = solve_stationary(q);
  double worst = 0.0;
  for (int x = 0; x <= 60; ++x) worst = std::max(worst, std::abs(sol.pi[x] - 0.5 * std::pow(0.5, x)));
  CHECK(worst < 1e-10);
  CHECK(sol.residual <= 1e-12);
}

TEST_CASE("stationary distribution: two-state symmetric chain") {
  RateMatrix q(StateSpace::line(1), {{0, 1, 1.0}, {1, 0, 1.0}});
  auto pi = stationary_distribution(q);
  CHECK(pi[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(pi[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("stationary distribution matches dense oracle on random chains") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto q = oracle::random_irreducible(6, rng);
    auto pi = stationary_distribution(q);
    auto ref = oracle::dense_stationary(oracle::to_dense(q));
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(pi[i] > 0.0);
      CHECK(std::abs(pi[i] - ref[i]) < 1e-12);
    }
  }
}

TEST_CASE("power iteration agrees with the direct solve") {
  std::mt19937_64 rng(11);
  auto q = oracle::random_irreducible(25, rng);
  SolverOptions opts;
  opts.method = SolveMethod::Power;
  opts.iter_tol = 1e-15;
  auto power = solve_stationary(q, opts);
  auto direct = solve_stationary(q);
  CHECK(power.method == SolveMethod::Power);
  CHECK(power.iterations > 1);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::abs(power.pi[i] - direct.pi[i]) < 1e-10);
}

TEST_CASE("power iteration reports non-convergence") {
  auto q = mm1(1.0, 1.01, 200);
  SolverOptions opts;
  opts.method = SolveMethod::Power;
  opts.max_iter = 10;
  opts.iter_tol = 1e-15;
  CHECK_THROWS_AS(solve_stationary(q, opts), Error);
}

TEST_CASE("self-loops do not move the stationary distribution") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    auto q = oracle::random_irreducible(12, rng);
    std::vector<Triplet> loops;
    for (std::size_t i = 0; i < q.size(); ++i) loops.push_back({i, i, u(rng)});
    auto looped = q + RateMatrix(q.space_ptr(), loops);
    auto a = stationary_distribution(q);
    auto b = stationary_distribution(looped);
    for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
  }
}

TEST_CASE("dtmc reversal") {
  SUBCASE("two-state chain") {
    auto space = StateSpace::line(1);
    Dtmc p(RateMatrix(space, {{0, 0, 0.7}, {0, 1, 0.3}, {1, 0, 0.6}, {1, 1, 0.4}}));
    Measure pi(space, {2.0 / 3.0, 1.0 / 3.0}, true);
    auto r = dtmc_reverse(p, pi, true);
    CHECK(r(0, 1) == doctest::Approx(0.3));
    CHECK(r(1, 0) == doctest::Approx(0.6));
    CHECK(r.row_defect() < 1e-12);
  }
  SUBCASE("symmetric walk on a cycle is self-dual") {
    auto space = StateSpace::line(4);
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < 5; ++i) {
      t.push_back({i, (i + 1) % 5, 0.5});
      t.push_back({i, (i + 4) % 5, 0.5});
    }
    Dtmc p{RateMatrix(space, t)};
    auto r = dtmc_reverse(p, Measure(space, std::vector<double>(5, 0.2), true), true);
    CHECK(max_abs_diff(r.probs(), p.probs()) < 1e-15);
  }
  SUBCASE("biased walk under a constant measure negates increments") {
    auto space = StateSpace::line(6);
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < 7; ++i) {
      t.push_back({i, (i + 1) % 7, 0.8});
      t.push_back({i, (i + 6) % 7, 0.2});
    }
    Dtmc p{RateMatrix(space, t)};
    auto r = dtmc_reverse(p, Measure(space, std::vector<double>(7, 3.0)), true);
    for (std::size_t i = 0; i < 7; ++i) {
      CHECK(r(i, (i + 1) % 7) == doctest::Approx(0.2));
      CHECK(r(i, (i + 6) % 7) == doctest::Approx(0.8));
    }
  }
  SUBCASE("errors") {
    auto space = StateSpace::line(1);
    Dtmc p(RateMatrix(space, {{0, 0, 0.7}, {0, 1, 0.3}, {1, 0, 0.6}, {1, 1, 0.4}}));
    CHECK_THROWS_AS(dtmc_reverse(p, Measure(space, {1.0, 0.0}), false), Error);
    CHECK_THROWS_AS(dtmc_reverse(p, Measure(space, {0.5, 0.5}), true), Error);
    CHECK_THROWS_AS(Dtmc(RateMatrix(space, {{0, 1, 0.5}, {1, 0, 1.0}})), Error);
  }
}
