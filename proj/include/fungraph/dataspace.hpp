#pragma once

#include "fungraph/basis.hpp"
#include "fungraph/sampler.hpp"

#include <vector>

namespace fungraph {

// C(t, t') for one posterior draw m: C_jl = sum_k phi_k(t) phi_k(t') c_k,jl / (s_kj s_kl).
// The diagonal is not defined for this off-diagonal object and is set to NaN.
Matrix cross_cov_draw(const PosteriorDraws& draws, Index m, const BasisMatrix& basis, Index t, Index tprime);

// Equal-time summaries, indexed [t][pair] with pairs in lexicographic order.
struct CrossCovFunction {
  Index p = 0;
  Index T = 0;
  double ci_level = 0.95;
  Matrix mean;   // T x npairs
  Matrix lower;  // T x npairs
  Matrix upper;  // T x npairs
};

struct EdgeFunction {
  Index p = 0;
  Index T = 0;
  // selected(t, pair) is 1 when the credible interval excludes zero
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> selected;
  Matrix lower;
  Matrix upper;

  bool has_edge(Index t, Index j, Index l) const;
  std::vector<std::pair<Index, Index>> edges_at(Index t) const;
};

// Type-7 (linear interpolation) empirical quantile of sorted values.
double quantile_sorted(const std::vector<double>& sorted, double prob);

// Per-draw equal-time values for one grid point: M x npairs.
Matrix equal_time_draws(const PosteriorDraws& draws, const BasisMatrix& basis, Index t);

// Summaries from a precomputed M x npairs draw matrix for each t.
CrossCovFunction summarize_values(const std::vector<Matrix>& values_per_t, Index p, double ci_level);

CrossCovFunction summarize(const PosteriorDraws& draws, const BasisMatrix& basis, double ci_level, int workers = 1);

EdgeFunction select_edges(const CrossCovFunction& summary);

// Posterior mean of C_jl(t, t') for each t' in tprimes.
Vector lagged_profile(const PosteriorDraws& draws, const BasisMatrix& basis, Index j, Index l, Index t,
                      const std::vector<Index>& tprimes);

// Optional per-t normalization C_jl / sqrt(|C_jj| |C_ll|) with the conditional
// variances C_jj(t,t) = sum_k phi_k(t)^2 / s_kj^2 (posterior means). This is a
// presentation aid, not a model quantity.
Matrix normalized_cross_cov(const PosteriorDraws& draws, const BasisMatrix& basis, const CrossCovFunction& summary);

}  // namespace fungraph
