#pragma once

#include "fungraph/basis.hpp"
#include "fungraph/graphmodel.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fungraph {

using Rng = std::mt19937_64;

struct SamplerConfig {
  int iterations = 6000;
  int burn_in = 1000;
  int thin = 5;
  std::uint64_t seed = 1;
  int grid_points = 100;
  int workers = 1;
  Hyperparameters hyper;
  double ci_level = 0.95;
  double s_step = 0.3;
  bool random_scan = false;

  // Blocks can be frozen at their initial values (used by diagnostics).
  bool update_rho = true;
  bool update_s = true;
  bool update_lambda = true;
  std::optional<Vector> initial_s;
  std::optional<double> initial_lambda;

  void validate() const;
  int retained_draws() const { return (iterations - burn_in) / thin; }
};

// Retained chain for one basis index k.
struct ChainDraws {
  Matrix s;       // M x p
  Matrix c;       // M x p(p-1)/2, lexicographic pairs
  Vector lambda;  // M
  Vector rho_acceptance;  // per pair
  Vector s_acceptance;    // per variable
  std::int64_t all_grid_zero = 0;  // rho updates skipped because every grid density vanished
};

struct PosteriorDraws {
  Index p = 0;
  std::vector<ChainDraws> chains;  // one per basis index k

  Index K() const { return static_cast<Index>(chains.size()); }
  Index M() const { return chains.empty() ? 0 : chains.front().lambda.size(); }
};

// Quantities of the rho_jl full conditional that do not depend on rho_jl:
// after permuting (j, l) to the last two coordinates of P = R'R,
// a = sum_{r<p-1} R_{r,p-1} R_{r,p}, r_jj = R_{p-1,p-1} and
// tail = 1 - sum_{r<p-1} R_{r,p}^2 = R_{p-1,p}^2 + R_{p,p}^2.
// Positive definiteness holds iff (rho - a)^2 < r_jj^2 tail, i.e. |rho - a| < half_width.
struct RhoConditional {
  double a = 0.0;
  double r_jj = 1.0;
  double tail = 1.0;
  double half_width = 1.0;
  double lambda_pair = 0.0;  // Lambda_{k,jl} = s_j s_l Gamma_jl
  double lambda = 1.0;
  double n = 0.0;

  // Last pivot R_{p,p}^2 of the Cholesky of P with rho_jl = rho, or a value
  // below kPivotTolerance when that P is not positive definite.
  double last_pivot(double rho) const {
    const double u = rho - a;
    return tail - u * u / (r_jj * r_jj);
  }
  double log_density(double rho) const;
};

RhoConditional rho_conditional(const BasisGraphState& state, const Matrix& gram, Index n, Index j, Index l);

// Unnormalized log full conditional of rho_jl; -inf outside the support or
// when the candidate fails the positive-definiteness certificate.
double rho_full_conditional_logdensity(const BasisGraphState& state, const Matrix& gram, Index n, Index j,
                                       Index l, double rho_candidate);

// Piecewise-uniform proposal over (a - b, a + b): cell heights are the
// target at cell midpoints, normalized.
class PiecewiseUniformProposal {
 public:
  explicit PiecewiseUniformProposal(int cells);
  PiecewiseUniformProposal(const RhoConditional& cond, int cells);

  // Rebuilds the heights for a new conditional, reusing the buffers.
  void rebuild(const RhoConditional& cond);

  bool degenerate() const { return degenerate_; }
  double lower() const { return lower_; }
  double width() const { return width_; }
  int cell_of(double rho) const;
  // log of the normalized proposal density at rho (cell height / width)
  double log_density(double rho) const;
  double sample(Rng& rng) const;

 private:
  int cells_;
  Eigen::ArrayXd steps_;     // g + 1/2
  Eigen::ArrayXd log_span_;  // log((g + 1/2)(cells - g - 1/2))
  Eigen::ArrayXd mid_, pivot_;
  double lower_ = 0.0;
  double width_ = 0.0;
  Eigen::ArrayXd log_height_;  // unnormalized, max-subtracted
  Eigen::ArrayXd cumulative_;
  double log_total_ = 0.0;
  bool degenerate_ = false;
};

struct UpdateResult {
  bool accepted = false;
  bool all_grid_zero = false;
};

UpdateResult sample_rho(BasisGraphState& state, const Matrix& gram, Index n, Index j, Index l, int grid_points,
                        Rng& rng);

// Unnormalized log full conditional of s_j.
double s_full_conditional_logdensity(const BasisGraphState& state, const Matrix& gram, Index n, Index j,
                                     double s_candidate, const Hyperparameters& hyper);

UpdateResult sample_s(BasisGraphState& state, const Matrix& gram, Index n, Index j, double step,
                      const Hyperparameters& hyper, Rng& rng);

// Gamma(alpha_lambda + p(p-1)/2, beta_lambda + sum_{j<l} |c_jl|)
double sample_lambda(BasisGraphState& state, const Hyperparameters& hyper, Rng& rng);

// One block Gibbs chain for one basis index.
ChainDraws run_chain_k(const Matrix& slab, const SamplerConfig& config, std::uint64_t stream);

PosteriorDraws run_chain(const BasisCoefficients& coeffs, const SamplerConfig& config);

// Stream seed of basis index k under a root seed.
std::uint64_t chain_seed(std::uint64_t root, Index k);

}  // namespace fungraph
