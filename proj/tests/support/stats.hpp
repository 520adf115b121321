#pragma once

// Distribution-comparison helpers shared by the statistical tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace testsupport {

// Asymptotic Kolmogorov survival function P(K > x).
inline double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// Asymptotic p-value of a two-sample statistic with the Stephens correction.
inline double ks_two_sample_pvalue(double d, std::size_t na, std::size_t nb) {
  const double ne = static_cast<double>(na) * static_cast<double>(nb) / static_cast<double>(na + nb);
  const double root = std::sqrt(ne);
  return kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
}

// One-sample statistic sup |F_n - F| against a continuous cdf.
inline double ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

// Cdf of an unnormalized log density tabulated on [lo, hi] by the trapezoid rule.
class GridCdf {
 public:
  GridCdf(const std::function<double(double)>& log_density, double lo, double hi, int points = 20001)
      : lo_(lo), step_((hi - lo) / (points - 1)), cum_(static_cast<std::size_t>(points), 0.0) {
    std::vector<double> logd(static_cast<std::size_t>(points));
    double top = -INFINITY;
    for (int i = 0; i < points; ++i) {
      logd[static_cast<std::size_t>(i)] = log_density(lo + i * step_);
      top = std::max(top, logd[static_cast<std::size_t>(i)]);
    }
    double prev = std::exp(logd[0] - top);
    for (int i = 1; i < points; ++i) {
      const double cur = std::exp(logd[static_cast<std::size_t>(i)] - top);
      cum_[static_cast<std::size_t>(i)] = cum_[static_cast<std::size_t>(i - 1)] + 0.5 * (prev + cur) * step_;
      prev = cur;
    }
    const double total = cum_.back();
    for (auto& c : cum_) c /= total;
  }

  double operator()(double x) const {
    if (x <= lo_) return 0.0;
    const double pos = (x - lo_) / step_;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= cum_.size()) return 1.0;
    const double w = pos - static_cast<double>(i);
    return (1.0 - w) * cum_[i] + w * cum_[i + 1];
  }

  // Location of the largest density increment.
  double mode() const {
    std::size_t best = 1;
    for (std::size_t i = 1; i < cum_.size(); ++i)
      if (cum_[i] - cum_[i - 1] > cum_[best] - cum_[best - 1]) best = i;
    return lo_ + (static_cast<double>(best) - 0.5) * step_;
  }

 private:
  double lo_;
  double step_;
  std::vector<double> cum_;
};

}  // namespace testsupport
