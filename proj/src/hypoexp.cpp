#include "fungraph/hypoexp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fungraph {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kAsymptoticCutoff = 37.0;

double log_add_exp(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double log_normal_cdf(double x) {
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x / std::sqrt(2.0)));
  if (x > -kAsymptoticCutoff) return std::log(0.5 * std::erfc(-x / std::sqrt(2.0)));
  // Phi(x) = phi(x)/|x| * (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8 - ...)
  const double z = 1.0 / (x * x);
  const double series = 1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z)));
  return -0.5 * x * x - std::log(-x) - kLogSqrt2Pi + std::log(series);
}

std::vector<double> perturb_tied_rates(std::vector<double> rates) {
  std::vector<std::size_t> order(rates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rates[a] < rates[b]; });
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t stop = start + 1;
    while (stop < order.size() &&
           std::abs(rates[order[stop]] - rates[order[start]]) <
               Hypoexponential::kMinRelativeGap * std::max(rates[order[stop]], rates[order[start]])) {
      ++stop;
    }
    const double base = rates[order[start]];
    for (std::size_t r = start; r < stop; ++r) {
      const double rank = static_cast<double>(r - start);
      rates[order[r]] = base * (1.0 + 1e-7 * rank);
    }
    start = stop;
  }
  return rates;
}

Hypoexponential::Hypoexponential(std::vector<double> rates) : rates_(std::move(rates)) {
  if (rates_.empty()) throw Error(ErrorCode::DegenerateRates, "at least one rate is required");
  for (double r : rates_) {
    if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorCode::DegenerateRates, "rates must be finite and positive");
  }
  const std::size_t K = rates_.size();
  for (std::size_t a = 0; a < K; ++a) {
    for (std::size_t b = a + 1; b < K; ++b) {
      const double gap = std::abs(rates_[a] - rates_[b]) / std::max(rates_[a], rates_[b]);
      if (gap < kMinRelativeGap) throw Error(ErrorCode::DegenerateRates, "rates must be pairwise distinct");
    }
  }
  weights_.assign(K, 1.0);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t h = 0; h < K; ++h) {
      // r_h / (r_h - r_k): the difference is exact for close rates
      if (h != k) weights_[k] *= rates_[h] / (rates_[h] - rates_[k]);
    }
  }
}

double Hypoexponential::pdf(double x) const {
  if (x < 0.0) return 0.0;
  double f = 0.0;
  for (std::size_t k = 0; k < rates_.size(); ++k) f += weights_[k] * rates_[k] * std::exp(-rates_[k] * x);
  // signed weights can leave round-off below zero near x = 0
  return std::max(f, 0.0);
}

double Hypoexponential::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  double tail = 0.0;
  for (std::size_t k = 0; k < rates_.size(); ++k) tail += weights_[k] * std::exp(-rates_[k] * x);
  return std::clamp(1.0 - tail, 0.0, 1.0);
}

double Hypoexponential::mean() const {
  double m = 0.0;
  for (double r : rates_) m += 1.0 / r;
  return m;
}

double Hypoexponential::variance() const {
  double v = 0.0;
  for (double r : rates_) v += 1.0 / (r * r);
  return v;
}

double mass_near_zero(const Hypoexponential& d, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::DomainError, "eps must be positive");
  if (std::isinf(eps)) return 1.0;
  return d.cdf(eps);
}

namespace {

std::vector<double> halved(const std::vector<double>& lambdas) {
  std::vector<double> out(lambdas);
  for (double& v : out) v *= 0.5;
  return out;
}

}  // namespace

ShrinkageDiagnostic::ShrinkageDiagnostic(double n, std::vector<double> lambdas)
    : n_(n), lambdas_(std::move(lambdas)), mixing_(halved(lambdas_)) {
  if (!(n_ >= 1.0)) throw Error(ErrorCode::DomainError, "pseudo-sample size must be >= 1");
}

double ShrinkageDiagnostic::log_component_density(std::size_t k, double ybar) const {
  const double lambda = lambdas_.at(k);
  const double root = std::sqrt(lambda);
  const double sqrt_n = std::sqrt(n_);
  const double shift = std::sqrt(lambda / n_);
  const double log_ck = std::log(0.5 * root) + lambda / (2.0 * n_);
  const double l1 = -ybar * root + log_normal_cdf(sqrt_n * ybar - shift);
  const double l2 = ybar * root + log_normal_cdf(-sqrt_n * ybar - shift);
  return log_ck + log_add_exp(l1, l2);
}

double ShrinkageDiagnostic::component_density(std::size_t k, double ybar) const {
  return std::exp(log_component_density(k, ybar));
}

double ShrinkageDiagnostic::component_shrinkage(std::size_t k, double ybar) const {
  // The two normal-pdf terms of m_k' cancel exactly, leaving
  // S_k = sqrt(lambda) tanh((l1 - l2) / 2).
  const double lambda = lambdas_.at(k);
  const double root = std::sqrt(lambda);
  const double sqrt_n = std::sqrt(n_);
  const double shift = std::sqrt(lambda / n_);
  const double l1 = -ybar * root + log_normal_cdf(sqrt_n * ybar - shift);
  const double l2 = ybar * root + log_normal_cdf(-sqrt_n * ybar - shift);
  return root * std::tanh(0.5 * (l1 - l2));
}

double ShrinkageDiagnostic::log_predictive_density(double ybar) const {
  const auto& w = mixing_.weights();
  const std::size_t K = lambdas_.size();
  std::vector<double> logs(K);
  for (std::size_t k = 0; k < K; ++k) logs[k] = log_component_density(k, ybar);
  const double top = *std::max_element(logs.begin(), logs.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) sum += w[k] * std::exp(logs[k] - top);
  return top + std::log(sum);
}

double ShrinkageDiagnostic::predictive_density(double ybar) const { return std::exp(log_predictive_density(ybar)); }

double ShrinkageDiagnostic::shrinkage(double ybar) const {
  const auto& w = mixing_.weights();
  const std::size_t K = lambdas_.size();
  std::vector<double> logs(K);
  for (std::size_t k = 0; k < K; ++k) logs[k] = log_component_density(k, ybar);
  const double top = *std::max_element(logs.begin(), logs.end());
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double scaled = w[k] * std::exp(logs[k] - top);
    num += scaled * component_shrinkage(k, ybar);
    den += scaled;
  }
  return num / den;
}

double ShrinkageDiagnostic::posterior_mean(double ybar) const { return ybar - shrinkage(ybar) / n_; }

std::vector<double> induced_rates(const Vector& phi_t, const std::vector<Vector>& s, const Vector& lambda,
                                  Index j, Index l) {
  const Index K = phi_t.size();
  if (static_cast<Index>(s.size()) != K || lambda.size() != K)
    throw Error(ErrorCode::DimensionMismatch, "per-basis parameters must have length K");
  std::vector<double> rates;
  for (Index k = 0; k < K; ++k) {
    const double phi = phi_t(k);
    if (phi == 0.0) continue;
    const auto& sk = s[static_cast<std::size_t>(k)];
    rates.push_back(lambda(k) * sk(j) * sk(l) / (phi * phi));
  }
  return rates;
}

}  // namespace fungraph
