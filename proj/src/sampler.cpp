#include "fungraph/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

namespace fungraph {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kChainStage = 0x6b;

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Schur-complement form of the permuted Cholesky quantities: with W = P^{-1}
// and B = {j, l}, (W_BB)^{-1} equals the conditional block
// [[r_jj^2, rho - a], [rho - a, tail]].
RhoConditional conditional_from_inverse(const Matrix& W, const Matrix& rho, const Vector& s, const Matrix& gram,
                                        double lambda, Index n, Index j, Index l) {
  const double w11 = W(j, j), w22 = W(l, l), w12 = W(j, l);
  const double det = w11 * w22 - w12 * w12;
  RhoConditional cond;
  const double g11 = w22 / det;
  const double g22 = w11 / det;
  const double g12 = -w12 / det;
  cond.r_jj = std::sqrt(g11);
  cond.tail = g22;
  cond.a = rho(j, l) - g12;
  cond.half_width = cond.r_jj * std::sqrt(std::max(cond.tail, 0.0));
  cond.lambda_pair = s(j) * s(l) * gram(j, l);
  cond.lambda = lambda;
  cond.n = static_cast<double>(n);
  return cond;
}

void inverse_from_factor(const Matrix& R, Matrix& Rinv, Matrix& W) {
  const Index p = R.rows();
  Rinv.setIdentity(p, p);
  R.triangularView<Eigen::Upper>().solveInPlace(Rinv);
  W.noalias() = Rinv * Rinv.transpose();
}

struct RhoStep {
  double value;
  bool accepted;
  bool all_grid_zero;
};

RhoStep mh_rho_step(const RhoConditional& cond, double current, PiecewiseUniformProposal& proposal, Rng& rng) {
  if (proposal.degenerate()) return {current, false, true};
  const double candidate = proposal.sample(rng);
  const double log_target_new = cond.log_density(candidate);
  if (log_target_new == kNegInf) return {current, false, false};
  const double log_target_old = cond.log_density(current);
  const double log_ratio =
      log_target_new - log_target_old + proposal.log_density(current) - proposal.log_density(candidate);
  if (std::log(uniform01(rng)) < log_ratio || candidate == current) return {candidate, true, false};
  return {current, false, false};
}

}  // namespace

void SamplerConfig::validate() const {
  if (iterations < 1 || burn_in < 0 || thin < 1)
    throw Error(ErrorCode::InvalidConfig, "iterations and thin must be positive, burn_in nonnegative");
  if (!(burn_in < iterations)) throw Error(ErrorCode::InvalidConfig, "burn_in must be smaller than iterations");
  if (grid_points < 10) throw Error(ErrorCode::InvalidConfig, "grid_points must be >= 10");
  if (workers < 1) throw Error(ErrorCode::InvalidConfig, "workers must be >= 1");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw Error(ErrorCode::InvalidConfig, "ci_level must lie in (0, 1)");
  if (!(s_step > 0.0)) throw Error(ErrorCode::InvalidConfig, "s_step must be positive");
  hyper.validate();
}

double RhoConditional::log_density(double rho) const {
  const double pivot = last_pivot(rho);
  if (!(pivot >= kPivotTolerance) || !(std::abs(rho) < 1.0)) return kNegInf;
  const double one_minus = 1.0 - rho * rho;
  // |P|^{n/2} exp(-Lambda rho - lambda |c|) |dc/drho|
  return 0.5 * n * std::log(pivot) - lambda_pair * rho - lambda * std::abs(rho) / one_minus +
         std::log((1.0 + rho * rho) / (one_minus * one_minus));
}

RhoConditional rho_conditional(const BasisGraphState& state, const Matrix& gram, Index n, Index j, Index l) {
  if (j == l) throw Error(ErrorCode::DomainError, "rho update needs j != l");
  Matrix Rinv, W;
  inverse_from_factor(state.chol(), Rinv, W);
  return conditional_from_inverse(W, state.rho(), state.s(), gram, state.lambda(), n, j, l);
}

double rho_full_conditional_logdensity(const BasisGraphState& state, const Matrix& gram, Index n, Index j,
                                       Index l, double rho_candidate) {
  const RhoConditional cond = rho_conditional(state, gram, n, j, l);
  if (!(std::abs(rho_candidate - cond.a) < cond.half_width)) return kNegInf;
  return cond.log_density(rho_candidate);
}

PiecewiseUniformProposal::PiecewiseUniformProposal(int cells) : cells_(cells) {
  if (cells < 1) throw Error(ErrorCode::InvalidConfig, "proposal needs at least one cell");
  steps_ = Eigen::ArrayXd::LinSpaced(cells, 0.5, cells - 0.5);
  log_span_ = (steps_ * steps_.reverse()).log();
}

PiecewiseUniformProposal::PiecewiseUniformProposal(const RhoConditional& cond, int cells)
    : PiecewiseUniformProposal(cells) {
  rebuild(cond);
}

void PiecewiseUniformProposal::rebuild(const RhoConditional& cond) {
  lower_ = cond.a - cond.half_width;
  width_ = 2.0 * cond.half_width / cells_;
  degenerate_ = !(width_ > 0.0);
  if (degenerate_) return;
  // At cell midpoints b + u = (g + 1/2) w and b - u = (cells - g - 1/2) w, so
  // the last pivot (b^2 - u^2) / r_jj^2 needs no per-cell logarithm.
  const double scale = width_ * width_ / (cond.r_jj * cond.r_jj);
  mid_ = lower_ + steps_ * width_;
  pivot_ = scale * steps_ * steps_.reverse();
  log_height_ = 0.5 * cond.n * (log_span_ + std::log(scale)) - cond.lambda_pair * mid_ -
                cond.lambda * mid_.abs() / (1.0 - mid_.square()) +
                ((1.0 + mid_.square()) / (1.0 - mid_.square()).square()).log();
  log_height_ = (pivot_ >= kPivotTolerance && mid_.abs() < 1.0).select(log_height_, kNegInf);
  const double top = log_height_.maxCoeff();
  if (!(top > kNegInf)) {
    degenerate_ = true;
    return;
  }
  log_height_ -= top;
  cumulative_ = log_height_.exp();
  std::partial_sum(cumulative_.begin(), cumulative_.end(), cumulative_.begin());
  log_total_ = std::log(cumulative_(cells_ - 1));
}

int PiecewiseUniformProposal::cell_of(double rho) const {
  const int g = static_cast<int>(std::floor((rho - lower_) / width_));
  return std::clamp(g, 0, cells_ - 1);
}

double PiecewiseUniformProposal::log_density(double rho) const {
  return log_height_(cell_of(rho)) - log_total_ - std::log(width_);
}

double PiecewiseUniformProposal::sample(Rng& rng) const {
  const Index cells = cumulative_.size();
  const double target = uniform01(rng) * cumulative_(cells - 1);
  const double* it = std::upper_bound(cumulative_.data(), cumulative_.data() + cells, target);
  const auto g = std::min<std::ptrdiff_t>(it - cumulative_.data(), cells - 1);
  return lower_ + (static_cast<double>(g) + uniform01(rng)) * width_;
}

UpdateResult sample_rho(BasisGraphState& state, const Matrix& gram, Index n, Index j, Index l, int grid_points,
                        Rng& rng) {
  const RhoConditional cond = rho_conditional(state, gram, n, j, l);
  PiecewiseUniformProposal proposal(cond, grid_points);
  const RhoStep step = mh_rho_step(cond, state.rho()(j, l), proposal, rng);
  if (step.accepted) state.set_rho(j, l, step.value);
  return {step.accepted, step.all_grid_zero};
}

double s_full_conditional_logdensity(const BasisGraphState& state, const Matrix& gram, Index n, Index j,
                                     double s_candidate, const Hyperparameters& hyper) {
  if (!(s_candidate > 0.0)) return kNegInf;
  const Index p = state.p();
  double linear = hyper.beta_s;
  for (Index l = 0; l < p; ++l) {
    if (l != j) linear += gram(j, l) * state.s()(l) * state.rho()(j, l);
  }
  return (static_cast<double>(n) + hyper.alpha_s - 1.0) * std::log(s_candidate) -
         0.5 * gram(j, j) * s_candidate * s_candidate - linear * s_candidate;
}

UpdateResult sample_s(BasisGraphState& state, const Matrix& gram, Index n, Index j, double step,
                      const Hyperparameters& hyper, Rng& rng) {
  const double current = state.s()(j);
  const double candidate = current * std::exp(step * std::normal_distribution<double>(0.0, 1.0)(rng));
  // random walk on log s: the Jacobian adds log s to the target
  const double log_ratio = s_full_conditional_logdensity(state, gram, n, j, candidate, hyper) -
                           s_full_conditional_logdensity(state, gram, n, j, current, hyper) +
                           std::log(candidate) - std::log(current);
  if (std::log(uniform01(rng)) < log_ratio) {
    state.set_s(j, candidate);
    return {true, false};
  }
  return {false, false};
}

double sample_lambda(BasisGraphState& state, const Hyperparameters& hyper, Rng& rng) {
  const Index p = state.p();
  double abs_sum = 0.0;
  for (Index j = 0; j < p; ++j)
    for (Index l = j + 1; l < p; ++l) abs_sum += std::abs(state.c(j, l));
  const double shape = hyper.alpha_lambda + static_cast<double>(pair_count(p));
  const double rate = hyper.beta_lambda + abs_sum;
  double draw = std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
  // a zero draw is possible only through underflow
  draw = std::max(draw, std::numeric_limits<double>::min());
  state.set_lambda(draw);
  return draw;
}

std::uint64_t chain_seed(std::uint64_t root, Index k) {
  return stream_seed(root, kChainStage, static_cast<std::uint64_t>(k));
}

namespace {

// Owns one basis index's state and the buffers reused across sweeps.
class ChainWorker {
 public:
  ChainWorker(const Matrix& slab, const SamplerConfig& config, std::uint64_t stream)
      : config_(config),
        n_(slab.rows()),
        p_(slab.cols()),
        gram_(slab.transpose() * slab),
        rng_(stream),
        wb_(slab.cols(), 2),
        proposal_(config.grid_points) {
    const double lambda0 =
        config.initial_lambda ? *config.initial_lambda : config.hyper.alpha_lambda / config.hyper.beta_lambda;
    state_ = BasisGraphState(p_, lambda0);
    if (config.initial_s) {
      if (config.initial_s->size() != p_) throw Error(ErrorCode::DimensionMismatch, "initial_s must have length p");
      for (Index j = 0; j < p_; ++j) state_.set_s(j, (*config.initial_s)(j));
    }
    rho_ = state_.rho();
    factor_ = state_.chol();
    inverse_from_factor(factor_, rinv_, inverse_);
    for (Index j = 0; j < p_; ++j)
      for (Index l = j + 1; l < p_; ++l) pairs_.emplace_back(j, l);
    s_order_.resize(static_cast<std::size_t>(p_));
    std::iota(s_order_.begin(), s_order_.end(), Index{0});
  }

  ChainDraws run() {
    const int M = config_.retained_draws();
    const Index npairs = pair_count(p_);
    ChainDraws out;
    out.s.resize(M, p_);
    out.c.resize(M, npairs);
    out.lambda.resize(M);
    Vector rho_accepts = Vector::Zero(npairs);
    Vector s_accepts = Vector::Zero(p_);

    int recorded = 0;
    for (int it = 1; it <= config_.iterations; ++it) {
      if (config_.random_scan) {
        std::shuffle(pairs_.begin(), pairs_.end(), rng_);
        std::shuffle(s_order_.begin(), s_order_.end(), rng_);
      }
      if (config_.update_rho) {
        for (const auto& [j, l] : pairs_) {
          const RhoStep step = update_rho(j, l);
          if (step.accepted) rho_accepts(pair_index(j, l, p_)) += 1.0;
          if (step.all_grid_zero) ++out.all_grid_zero;
        }
        refresh_factor();
      }
      if (config_.update_s) {
        for (Index j : s_order_) {
          if (sample_s(state_, gram_, n_, j, config_.s_step, config_.hyper, rng_).accepted) s_accepts(j) += 1.0;
        }
      }
      if (config_.update_lambda) sample_lambda(state_, config_.hyper, rng_);

      if (it > config_.burn_in && (it - config_.burn_in) % config_.thin == 0 && recorded < M) {
        out.s.row(recorded) = state_.s().transpose();
        out.c.row(recorded) = state_.c_vector().transpose();
        out.lambda(recorded) = state_.lambda();
        ++recorded;
      }
    }
    const double iters = static_cast<double>(config_.iterations);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.rho_acceptance = config_.update_rho ? Vector(rho_accepts / iters) : Vector::Constant(npairs, nan);
    out.s_acceptance = config_.update_s ? Vector(s_accepts / iters) : Vector::Constant(p_, nan);
    audit(out);
    return out;
  }

 private:
  RhoStep update_rho(Index j, Index l) {
    const RhoConditional cond = conditional_from_inverse(inverse_, rho_, state_.s(), gram_, state_.lambda(), n_, j, l);
    proposal_.rebuild(cond);
    const double current = rho_(j, l);
    const RhoStep step = mh_rho_step(cond, current, proposal_, rng_);
    if (step.accepted && step.value != current) {
      rho_(j, l) = rho_(l, j) = step.value;
      pair_update_inverse(j, l, step.value - current);
    }
    return step;
  }

  // Woodbury rank-2 update of W = P^{-1} after P_jl = P_lj += delta:
  // W <- W - W_B (I + C W_BB)^{-1} C W_B' with C = delta [[0, 1], [1, 0]].
  void pair_update_inverse(Index j, Index l, double delta) {
    Eigen::Matrix2d C;
    C << 0.0, delta, delta, 0.0;
    Eigen::Matrix2d wbb;
    wbb << inverse_(j, j), inverse_(j, l), inverse_(l, j), inverse_(l, l);
    const Eigen::Matrix2d X = (Eigen::Matrix2d::Identity() + C * wbb).inverse() * C;
    wb_.col(0) = inverse_.col(j);
    wb_.col(1) = inverse_.col(l);
    inverse_.noalias() -= wb_ * X * wb_.transpose();
  }

  // Refactors P once per sweep; this bounds the drift of the updated inverse
  // and certifies the state.
  void refresh_factor() {
    if (!cholesky_upper_inplace(rho_, factor_))
      throw Error(ErrorCode::NotPositiveDefinite, "partial correlation matrix left the positive definite cone");
    state_.set_rho_matrix(rho_, factor_);
    inverse_from_factor(factor_, rinv_, inverse_);
  }

  // Re-certifies P for every 100th retained draw.
  void audit(const ChainDraws& out) const {
    Matrix rho(p_, p_);
    for (Index m = 0; m < out.lambda.size(); m += 100) {
      rho.setIdentity();
      for (Index j = 0; j < p_; ++j)
        for (Index l = j + 1; l < p_; ++l) rho(j, l) = rho(l, j) = c_to_rho(out.c(m, pair_index(j, l, p_)));
      if (!is_positive_definite(rho))
        throw Error(ErrorCode::NotPositiveDefinite, "retained draw " + std::to_string(m) + " is not positive definite");
    }
  }

  const SamplerConfig& config_;
  Index n_;
  Index p_;
  Matrix gram_;
  Rng rng_;
  BasisGraphState state_;
  Matrix rho_, factor_, rinv_, inverse_;
  Eigen::Matrix<double, Eigen::Dynamic, 2> wb_;
  PiecewiseUniformProposal proposal_;
  std::vector<std::pair<Index, Index>> pairs_;
  std::vector<Index> s_order_;
};

}  // namespace

ChainDraws run_chain_k(const Matrix& slab, const SamplerConfig& config, std::uint64_t stream) {
  config.validate();
  if (slab.cols() < 1) throw Error(ErrorCode::DimensionMismatch, "slab needs at least one column");
  if (!slab.allFinite()) throw Error(ErrorCode::DataError, "coefficients must be finite");
  ChainWorker worker(slab, config, stream);
  return worker.run();
}

PosteriorDraws run_chain(const BasisCoefficients& coeffs, const SamplerConfig& config) {
  config.validate();
  if (coeffs.K() < 1) throw Error(ErrorCode::DimensionMismatch, "no basis coefficients");
  if (coeffs.p() < 2) throw Error(ErrorCode::DimensionMismatch, "the sampler needs p >= 2");
  const Index K = coeffs.K();
  PosteriorDraws draws;
  draws.p = coeffs.p();
  draws.chains.resize(static_cast<std::size_t>(K));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(K));

  std::atomic<Index> next{0};
  auto work = [&]() {
    for (Index k = next++; k < K; k = next++) {
      try {
        draws.chains[static_cast<std::size_t>(k)] = run_chain_k(coeffs.slab(k), config, chain_seed(config.seed, k));
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    }
  };
  const int workers = static_cast<int>(std::min<Index>(config.workers, K));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return draws;
}

}  // namespace fungraph
