#pragma once

#include "fungraph/common.hpp"

#include <random>
#include <vector>

namespace fungraph {

// Standard normal helpers. log_normal_cdf stays accurate far into the lower
// tail: beyond |x| > 37 it switches to the asymptotic Mills-ratio expansion.
double normal_cdf(double x);
double log_normal_cdf(double x);

// Multiplies tied (relative gap < 1e-9) rates by (1 + 1e-7 * rank) within each
// tie group so the result is accepted by Hypoexponential.
std::vector<double> perturb_tied_rates(std::vector<double> rates);

// Law of a sum of independent Exp(rate_k) variables with pairwise-distinct rates.
// f(x) = sum_k P_k rate_k exp(-rate_k x),  P_k = prod_{h != k} (1 - rate_k / rate_h)^{-1}.
class Hypoexponential {
 public:
  static constexpr double kMinRelativeGap = 1e-9;

  explicit Hypoexponential(std::vector<double> rates);

  const std::vector<double>& rates() const { return rates_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return rates_.size(); }

  double pdf(double x) const;
  double cdf(double x) const;
  double mean() const;
  double variance() const;

  template <typename Rng>
  double sample(Rng& rng) const {
    double total = 0.0;
    for (double r : rates_) total += std::exponential_distribution<double>(r)(rng);
    return total;
  }

 private:
  std::vector<double> rates_;
  std::vector<double> weights_;
};

struct HypoMoments {
  double mean;
  double variance;
};

inline double hypo_pdf(const Hypoexponential& d, double x) { return d.pdf(x); }
inline HypoMoments hypo_moments(const Hypoexponential& d) { return {d.mean(), d.variance()}; }

template <typename Rng>
double sample_hypo(const Hypoexponential& d, Rng& rng) {
  return d.sample(rng);
}

// X | tau ~ N(0, tau), tau ~ Hypo(mixing rates). tau is a variance.
template <typename Rng>
double sample_normal_hypo(const Hypoexponential& mixing, Rng& rng) {
  const double tau = mixing.sample(rng);
  return std::sqrt(tau) * std::normal_distribution<double>(0.0, 1.0)(rng);
}

// P(tau < eps) for tau ~ d: 1 - sum_k P_k exp(-rate_k eps).
double mass_near_zero(const Hypoexponential& d, double eps);

// Shrinkage diagnostics for ybar ~ N(mu, 1/n), mu ~ N(0, tau^2),
// tau^2 ~ Hypo(lambda_1/2, ..., lambda_K/2). `lambdas` holds the lambda_k.
class ShrinkageDiagnostic {
 public:
  ShrinkageDiagnostic(double n, std::vector<double> lambdas);

  double n() const { return n_; }
  const std::vector<double>& lambdas() const { return lambdas_; }
  // Mixing distribution Hypo(lambda/2).
  const Hypoexponential& mixing() const { return mixing_; }

  // log m_k(ybar) for the normal-exponential component k.
  double log_component_density(std::size_t k, double ybar) const;
  double component_density(std::size_t k, double ybar) const;
  // S_k(ybar) = -d/dybar log m_k(ybar)
  double component_shrinkage(std::size_t k, double ybar) const;

  // m(ybar) = sum_k P_k m_k(ybar)
  double log_predictive_density(double ybar) const;
  double predictive_density(double ybar) const;
  // S(ybar) = -d/dybar log m(ybar); positive for ybar > 0.
  double shrinkage(double ybar) const;
  // E(mu | ybar) = ybar - S(ybar) / n (sigma^2 = 1)
  double posterior_mean(double ybar) const;

 private:
  double n_;
  std::vector<double> lambdas_;
  Hypoexponential mixing_;
};

inline double predictive_density_component(const ShrinkageDiagnostic& diag, std::size_t k, double ybar) {
  return diag.component_density(k, ybar);
}
inline double shrinkage_S(const ShrinkageDiagnostic& diag, double ybar) { return diag.shrinkage(ybar); }
inline double posterior_mean_mu(const ShrinkageDiagnostic& diag, double ybar) { return diag.posterior_mean(ybar); }

// Data-space N-Hypo parameters at grid point t for pair (j, l):
// lambda_tk = lambda_k s_kj s_kl / phi_k(t)^2, over bases with phi_k(t) != 0.
// `phi_t` holds phi_k(t) for all k; s and lambda are per k.
std::vector<double> induced_rates(const Vector& phi_t, const std::vector<Vector>& s, const Vector& lambda,
                                  Index j, Index l);

}  // namespace fungraph
