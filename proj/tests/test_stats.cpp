#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "qrev/error.hpp"
#include "qrev/rng.hpp"
#include "qrev/stats.hpp"

using namespace qrev;

TEST_CASE("kolmogorov tail") {
  CHECK(kolmogorov_q(0.0) == doctest::Approx(1.0));
  CHECK(kolmogorov_q(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(kolmogorov_q(1.6276) == doctest::Approx(0.01).epsilon(1e-3));
  CHECK(kolmogorov_q(5.0) < 1e-20);
}

TEST_CASE("KS test against exponential") {
  RngStream rng(42, 0);
  std::vector<double> e(100000);
  for (auto& x : e) x = rng.exponential(1.0);
  CHECK(ks_exponential(e).p > 0.01);

  std::vector<double> erl(100000);
  for (auto& x : erl) x = rng.exponential(2.0) + rng.exponential(2.0);
  CHECK(ks_exponential(erl).p < 1e-6);

  std::vector<double> flat(1000, 1.0);
  auto c = ks_exponential(flat);
  CHECK(c.d == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-3));
  CHECK(c.p < 1e-100);

  CHECK_THROWS_AS(ks_exponential(std::vector<double>(99, 1.0)), Error);
}

TEST_CASE("autocorrelation") {
  RngStream rng(7, 0);
  std::vector<double> e(100000);
  for (auto& x : e) x = rng.exponential(1.0);
  CHECK(std::abs(lag_autocorrelation(e, 1)) < 3.0 / std::sqrt(1e5));

  std::vector<double> alt(1000);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? 1.0 : 3.0;
  CHECK(lag_autocorrelation(alt, 1) == doctest::Approx(-1.0).epsilon(1e-2));

  CHECK_THROWS_AS(lag_autocorrelation(std::vector<double>(50, 1.0), 5), Error);
  CHECK(lag_autocorrelation(std::vector<double>(50, 1.0), 4) == 0.0);
}

TEST_CASE("mean and correlation") {
  std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8}, c{4, 3, 2, 1}, k{5, 5, 5, 5};
  CHECK(mean(a) == doctest::Approx(2.5));
  CHECK(correlation(a, b) == doctest::Approx(1.0));
  CHECK(correlation(a, c) == doctest::Approx(-1.0));
  CHECK(correlation(a, k) == 0.0);
}

TEST_CASE("chi-square goodness of fit") {
  std::vector<double> probs{0.5, 0.25, 0.125, 0.125};
  std::vector<double> exact{500, 250, 125, 125};
  auto r = chi_square_gof(exact, probs);
  CHECK(r.statistic == doctest::Approx(0.0));
  CHECK(r.dof == 3);
  CHECK(r.p == doctest::Approx(1.0));

  std::vector<double> off{400, 300, 150, 150};
  CHECK(chi_square_gof(off, probs).p < 1e-6);

  // Two tiny tail cells get pooled.
  std::vector<double> tail_probs{0.6, 0.39, 0.005, 0.005};
  std::vector<double> tail{60, 39, 1, 0};
  auto t = chi_square_gof(tail, tail_probs);
  CHECK(t.bins == 2);
  CHECK(t.dof == 1);

  // Statistic and p-value for a hand-computed case: (60-50)^2/50 * 2 = 4, 1 dof.
  std::vector<double> coin{60, 40};
  auto h = chi_square_gof(coin, std::vector<double>{0.5, 0.5});
  CHECK(h.statistic == doctest::Approx(4.0));
  CHECK(h.p == doctest::Approx(0.0455003).epsilon(1e-5));
}

TEST_CASE("random streams") {
  RngStream a(1, 0), b(1, 0), c(1, 1), d(2, 0);
  bool differ_stream = false, differ_seed = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x > 0.0);
    CHECK(x < 1.0);
    differ_stream |= x != c.uniform();
    differ_seed |= x != d.uniform();
  }
  CHECK(differ_stream);
  CHECK(differ_seed);

  RngStream e(3, 0);
  double s = 0.0;
  for (int i = 0; i < 100000; ++i) s += e.exponential(4.0);
  CHECK(s / 1e5 == doctest::Approx(0.25).epsilon(0.02));
  CHECK(default_seed(9) > 0);
}
