#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qrev {

struct KsResult {
  double d = 0.0;  // sup |F_n - F|
  double p = 0.0;
};

/// Kolmogorov limit P(K > lambda) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

/// One-sample KS test against Exp(1 / sample mean). The p-value uses the
/// asymptotic Kolmogorov law with the (sqrt n + 0.12 + 0.11 / sqrt n) small
/// sample factor. Estimating the mean from the same sample makes this
/// conservative (the Lilliefors effect): true rejection rates are lower than
/// the nominal level. Throws TooFewSamples below 100 samples.
KsResult ks_exponential(std::span<const double> samples);

/// Sample autocorrelation at `lag`. Throws TooFewSamples unless lag < n / 10.
double lag_autocorrelation(std::span<const double> x, std::size_t lag);

double mean(std::span<const double> x);

/// Pearson correlation; 0 when either side is constant.
double correlation(std::span<const double> a, std::span<const double> b);

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p = 1.0;
  std::size_t bins = 0;  // after pooling
};

/// Pearson goodness of fit of observed counts against probabilities. Cells
/// are pooled in order until each pooled cell expects at least `min_expected`.
ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> probs,
                               double min_expected = 5.0);

}  // namespace qrev
