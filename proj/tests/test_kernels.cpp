#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qrev/kernels.hpp"

using namespace qrev;

namespace {

RateMatrix big_chain(std::size_t n) {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i) {
    t.push_back({i, (i + 1) % n, u(rng)});
    t.push_back({i, (i + 7) % n, u(rng)});
    t.push_back({(i + 3) % n, i, u(rng)});
    if (i % 5 == 0) t.push_back({i, i, u(rng)});
  }
  return RateMatrix(StateSpace::line(static_cast<int>(n) - 1), t);
}

std::vector<double> weights(std::size_t n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(n);
  for (auto& x : w) x = u(rng);
  return w;
}

}  // namespace

TEST_CASE("serial and parallel kernels agree") {
  for (std::size_t n : {10u, 5000u, 40000u}) {
    auto q = big_chain(n);
    auto w = weights(n);
    CHECK(kernels::serial::row_sums(q) == kernels::parallel::row_sums(q));
    CHECK(kernels::serial::offdiag_inflow(q, w) == kernels::parallel::offdiag_inflow(q, w));
    CHECK(kernels::serial::balance_residual(q, w) == kernels::parallel::balance_residual(q, w));
    CHECK(kernels::serial::max_abs_distance(w, q.values().subspan(0, n)) ==
          kernels::parallel::max_abs_distance(w, q.values().subspan(0, n)));
    CHECK(kernels::serial::l1_distance(w, q.values().subspan(0, n)) ==
          doctest::Approx(kernels::parallel::l1_distance(w, q.values().subspan(0, n))).epsilon(1e-12));

    auto exit = kernels::offdiag_exit_rates(q);
    double lambda = 0.0;
    for (double a : exit) lambda = std::max(lambda, a);
    lambda *= 1.05;
    std::vector<double> a(n), b(n);
    kernels::serial::uniformized_step(q, exit, lambda, w, a);
    kernels::parallel::uniformized_step(q, exit, lambda, w, b);
    CHECK(a == b);
  }
}

TEST_CASE("kernels against dense references") {
  auto q = big_chain(40);
  auto d = oracle::to_dense(q);
  auto w = weights(40);
  auto rs = kernels::row_sums(q);
  auto in = kernels::offdiag_inflow(q, w);
  for (std::size_t i = 0; i < 40; ++i) {
    double row = 0.0, inflow = 0.0;
    for (std::size_t j = 0; j < 40; ++j) {
      row += d[i][j];
      if (j != i) inflow += w[j] * d[j][i];
    }
    CHECK(rs[i] == doctest::Approx(row));
    CHECK(in[i] == doctest::Approx(inflow));
  }
  // Uniformized step preserves total mass.
  auto exit = kernels::offdiag_exit_rates(q);
  std::vector<double> out(40);
  kernels::uniformized_step(q, exit, 20.0, w, out);
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i < 40; ++i) s0 += w[i], s1 += out[i];
  CHECK(s1 == doctest::Approx(s0));
}
