#include "qrev/stats.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "qrev/error.hpp"

namespace qrev {

double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_exponential(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 100) throw Error(ErrorCode::TooFewSamples, "KS test needs at least 100 samples");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double m = mean(x);
  if (!(m > 0.0)) throw Error(ErrorCode::InvalidArgument, "exponential fit needs a positive mean");
  KsResult out;
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = 1.0 - std::exp(-x[i] / m);
    out.d = std::max({out.d, static_cast<double>(i + 1) / nn - f, f - static_cast<double>(i) / nn});
  }
  const double rn = std::sqrt(nn);
  out.p = kolmogorov_q((rn + 0.12 + 0.11 / rn) * out.d);
  return out;
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double lag_autocorrelation(std::span<const double> x, std::size_t lag) {
  const std::size_t n = x.size();
  if (n < 2 || lag == 0 || lag * 10 >= n) {
    throw Error(ErrorCode::TooFewSamples, "autocorrelation at lag " + std::to_string(lag) + " needs more than " +
                                              std::to_string(10 * lag) + " samples");
  }
  const double m = mean(x);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) den += (x[i] - m) * (x[i] - m);
  for (std::size_t i = 0; i + lag < n; ++i) num += (x[i] - m) * (x[i + lag] - m);
  return den > 0.0 ? num / den : 0.0;
}

double correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "correlation of unequal samples");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return saa > 0.0 && sbb > 0.0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> probs, double min_expected) {
  if (observed.size() != probs.size()) throw Error(ErrorCode::DimensionMismatch, "one probability per cell required");
  double total = 0.0;
  for (double o : observed) total += o;
  if (!(total > 0.0)) throw Error(ErrorCode::TooFewSamples, "no observations");
  std::vector<double> obs, exp;
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o_acc += observed[i];
    e_acc += probs[i] * total;
    if (e_acc >= min_expected) {
      obs.push_back(o_acc);
      exp.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (exp.empty()) {
      obs.push_back(o_acc);
      exp.push_back(e_acc);
    } else {
      obs.back() += o_acc;
      exp.back() += e_acc;
    }
  }
  ChiSquareResult out;
  out.bins = obs.size();
  if (out.bins < 2) return out;
  for (std::size_t i = 0; i < obs.size(); ++i) out.statistic += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
  out.dof = out.bins - 1;
  out.p = boost::math::gamma_q(0.5 * static_cast<double>(out.dof), 0.5 * out.statistic);
  return out;
}

}  // namespace qrev
