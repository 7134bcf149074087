#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qrev/ctmc.hpp"
#include "qrev/error.hpp"
#include "qrev/kernels.hpp"
#include "qrev/models.hpp"
#include "qrev/reversal.hpp"

using namespace qrev;

namespace {

Measure dense_pi(const RateMatrix& q) { return Measure(q.space_ptr(), oracle::dense_stationary(oracle::to_dense(q)), true); }

RateMatrix cycle3(double cw, double ccw) {
  auto s = StateSpace::line(2);
  return RateMatrix(s, {{0, 1, cw}, {1, 2, cw}, {2, 0, cw}, {1, 0, ccw}, {2, 1, ccw}, {0, 2, ccw}});
}

}  // namespace

TEST_CASE("reverse of M/M/1 under its geometric law is itself") {
  auto m = build_mm1(1.0, 2.0, 30);
  auto rq = reverse(m.q, *m.closed_form_pi);
  CHECK(max_rel_diff(rq, m.q) < 1e-12);
}

TEST_CASE("reverse under uniform weights is the transpose") {
  std::mt19937_64 rng(5);
  auto q = oracle::random_irreducible(12, rng);
  auto rq = reverse(q, Measure(q.space_ptr(), std::vector<double>(12, 1.0)));
  for (const auto& t : q.triplets()) CHECK(rq(t.to, t.from) == doctest::Approx(t.value));
  CHECK(rq.nnz() == q.nnz());
}

TEST_CASE("rows with zero weight vanish") {
  std::mt19937_64 rng(6);
  auto q = oracle::random_irreducible(8, rng);
  std::vector<double> w(8, 1.0);
  w[3] = 0.0;
  auto rq = reverse(q, Measure(q.space_ptr(), w));
  CHECK(rq.row_cols(3).empty());
}

TEST_CASE("reversal is an involution for positive weights") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int rep = 0; rep < 20; ++rep) {
    auto q = oracle::random_irreducible(15, rng);
    std::vector<double> w(15);
    for (auto& x : w) x = u(rng);
    Measure m(q.space_ptr(), w);
    CHECK(max_rel_diff(reverse(reverse(q, m), m), q) < 1e-14);
  }
}

TEST_CASE("triple reversal equals single reversal when weights vanish somewhere") {
  std::mt19937_64 rng(12);
  auto q = oracle::random_irreducible(10, rng);
  std::vector<double> w(10, 1.0);
  w[2] = 0.0;
  w[7] = 0.0;
  for (std::size_t i = 0; i < 10; ++i) w[i] *= 1.0 + 0.1 * static_cast<double>(i);
  Measure m(q.space_ptr(), w);
  auto once = reverse(q, m);
  auto thrice = reverse(reverse(once, m), m);
  CHECK(max_rel_diff(thrice, once) < 1e-14);
}

TEST_CASE("kelly check verdicts") {
  auto m = build_mm1(1.0, 2.0, 40);
  const auto& pi = *m.closed_form_pi;
  CHECK(kelly_check(m.q, m.q, pi).pass());

  auto bumped = pi.perturbed(5, 1.1);
  CHECK(kelly_check(m.q, m.q, bumped).verdict == KellyVerdict::FailBalance);

  // Reversal under a non-stationary measure satisfies cross balance by construction.
  auto r = kelly_check(m.q, reverse(m.q, bumped), bumped);
  CHECK(r.balance_residual < 1e-14);
  CHECK(r.verdict == KellyVerdict::FailRateConservation);

  CHECK_THROWS_AS(kelly_check(m.q, build_mm1(1.0, 2.0, 10).q, pi), Error);
}

TEST_CASE("kelly biconditional on random chains") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 30; ++rep) {
    auto q = oracle::random_irreducible(4 + rep % 20, rng);
    auto pi = dense_pi(q);
    CHECK(kelly_check(q, reverse(q, pi), pi).pass());
    auto bad = pi.perturbed(rep % q.size(), 1.01);
    auto r = kelly_check(q, reverse(q, bad), bad);
    CHECK(r.verdict == KellyVerdict::FailRateConservation);
  }
}

TEST_CASE("stationary law is also stationary for the reversed chain") {
  std::mt19937_64 rng(22);
  auto q = oracle::random_irreducible(20, rng);
  auto pi = dense_pi(q);
  CHECK(stationary_residual(reverse(q, pi), pi) < 1e-12);
}

TEST_CASE("detailed balance") {
  auto mm1 = build_mm1(1.0, 2.0, 30);
  CHECK(is_reversible(mm1.q, *mm1.closed_form_pi));
  auto mms = build_mms(1.0, 1.0, 2, 30);
  CHECK(is_reversible(mms.q, stationary_distribution(mms.q)));
  auto c = cycle3(2.0, 1.0);
  CHECK_FALSE(is_reversible(c, Measure(c.space_ptr(), {1.0, 1.0, 1.0})));
}

TEST_CASE("is_reversible agrees with reverse(q) == q") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 10; ++rep) {
    auto q = oracle::random_irreducible(8, rng);
    auto pi = dense_pi(q);
    CHECK(is_reversible(q, pi, 1e-10) == (max_rel_diff(reverse(q, pi), q) < 1e-10));
  }
  auto m = build_mms(2.0, 1.5, 3, 20);
  auto pi = stationary_distribution(m.q);
  CHECK(is_reversible(m.q, pi, 1e-10));
  CHECK(max_rel_diff(reverse(m.q, pi), m.q) < 1e-10);
}

TEST_CASE("birth-death measure") {
  auto m = build_mm1(1.0, 2.0, 20);
  auto b = birth_death_measure(m.q);
  for (std::size_t x = 0; x < b.size(); ++x) CHECK(b[x] == doctest::Approx(std::pow(0.5, x)).epsilon(1e-14));

  auto m2 = build_mms(1.0, 1.0, 2, 10);
  auto b2 = birth_death_measure(m2.q);
  CHECK(b2[0] == 1.0);
  CHECK(b2[1] == doctest::Approx(1.0));
  CHECK(b2[2] == doctest::Approx(0.5));
  CHECK(b2[3] == doctest::Approx(0.25));
  CHECK(b2[4] == doctest::Approx(0.125));

  auto flat = build_birth_death(std::vector<double>(6, 1.5), std::vector<double>(6, 1.5));
  const auto fm = birth_death_measure(flat.q);
  for (double w : fm.weights()) CHECK(w == doctest::Approx(1.0));

  CHECK_THROWS_AS(birth_death_measure(cycle3(1.0, 1.0)), Error);
  auto s = StateSpace::line(2);
  CHECK_THROWS_AS(birth_death_measure(RateMatrix(s, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 1, 1.0}})), Error);
}

TEST_CASE("path-product measure") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.2, 4.0);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> up(25), down(25);
    for (auto& x : up) x = u(rng);
    for (auto& x : down) x = u(rng);
    auto m = build_birth_death(up, down);
    auto r = reversible_measure(m.q);
    REQUIRE(r.consistent());
    auto b = birth_death_measure(m.q);
    for (std::size_t x = 0; x < b.size(); ++x) CHECK(std::abs((*r.measure)[x] - b[x]) <= 1e-12 * std::max(1.0, b[x]));
  }

  auto bad = reversible_measure(cycle3(2.0, 1.0));
  CHECK_FALSE(bad.consistent());
  CHECK(bad.cycle.size() == 3);
  CHECK(bad.inconsistency > 0.1);

  auto single = StateSpace::line(0);
  auto one = reversible_measure(RateMatrix(single, {}));
  REQUIRE(one.consistent());
  CHECK((*one.measure)[0] == 1.0);

  auto split = StateSpace::line(2);
  CHECK_THROWS_AS(reversible_measure(RateMatrix(split, {{0, 1, 1.0}, {1, 0, 1.0}})), Error);
}

TEST_CASE("exit rates of the reversed chain match") {
  std::mt19937_64 rng(41);
  for (int rep = 0; rep < 10; ++rep) {
    auto q = oracle::random_irreducible(10 + rep, rng);
    auto pi = dense_pi(q);
    auto a = exit_rates(q);
    auto at = exit_rates(reverse(q, pi));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - at[i]) <= 1e-12 * std::max(1.0, a[i]));
  }
}
