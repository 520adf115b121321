#include "fungraph/dataspace.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace fungraph {

namespace {

void check_dims(const PosteriorDraws& draws, const BasisMatrix& basis) {
  if (draws.K() != basis.K())
    throw Error(ErrorCode::DimensionMismatch,
                "draws cover K=" + std::to_string(draws.K()) + " bases, basis has K=" + std::to_string(basis.K()));
}

// c_k / (s_kj s_kl) for every retained draw, M x npairs per k.
std::vector<Matrix> scaled_c(const PosteriorDraws& draws) {
  const Index p = draws.p;
  std::vector<Matrix> out(static_cast<std::size_t>(draws.K()));
  for (Index k = 0; k < draws.K(); ++k) {
    const ChainDraws& ch = draws.chains[static_cast<std::size_t>(k)];
    Matrix r = ch.c;
    for (Index j = 0; j < p; ++j)
      for (Index l = j + 1; l < p; ++l) r.col(pair_index(j, l, p)).array() /= ch.s.col(j).array() * ch.s.col(l).array();
    out[static_cast<std::size_t>(k)] = std::move(r);
  }
  return out;
}

Matrix weighted_sum(const std::vector<Matrix>& scaled, const RowVector& weights) {
  Matrix acc = Matrix::Zero(scaled.front().rows(), scaled.front().cols());
  for (Index k = 0; k < weights.size(); ++k) {
    const double w = weights(k);
    if (w != 0.0) acc.noalias() += w * scaled[static_cast<std::size_t>(k)];
  }
  return acc;
}

template <typename Fn>
void parallel_for(Index count, int workers, Fn&& fn) {
  if (workers <= 1 || count <= 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::vector<std::thread> pool;
  const int used = static_cast<int>(std::min<Index>(workers, count));
  for (int w = 0; w < used; ++w) {
    pool.emplace_back([&]() {
      for (Index i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

void summarize_slice(const Matrix& values, double ci_level, Index t, CrossCovFunction& out) {
  const double tail = 0.5 * (1.0 - ci_level);
  std::vector<double> column(static_cast<std::size_t>(values.rows()));
  for (Index q = 0; q < values.cols(); ++q) {
    for (Index m = 0; m < values.rows(); ++m) column[static_cast<std::size_t>(m)] = values(m, q);
    std::sort(column.begin(), column.end());
    out.mean(t, q) = values.col(q).mean();
    out.lower(t, q) = quantile_sorted(column, tail);
    out.upper(t, q) = quantile_sorted(column, 1.0 - tail);
  }
}

}  // namespace

Matrix cross_cov_draw(const PosteriorDraws& draws, Index m, const BasisMatrix& basis, Index t, Index tprime) {
  check_dims(draws, basis);
  if (t < 0 || t >= basis.T() || tprime < 0 || tprime >= basis.T())
    throw Error(ErrorCode::DimensionMismatch, "grid index out of range");
  if (m < 0 || m >= draws.M()) throw Error(ErrorCode::DimensionMismatch, "draw index out of range");
  const Index p = draws.p;
  Matrix C = Matrix::Zero(p, p);
  for (Index k = 0; k < draws.K(); ++k) {
    const double w = basis.phi(k, t) * basis.phi(k, tprime);
    if (w == 0.0) continue;
    const ChainDraws& ch = draws.chains[static_cast<std::size_t>(k)];
    for (Index j = 0; j < p; ++j) {
      for (Index l = j + 1; l < p; ++l) {
        const double v = w * ch.c(m, pair_index(j, l, p)) / (ch.s(m, j) * ch.s(m, l));
        C(j, l) += v;
        C(l, j) += v;
      }
    }
  }
  C.diagonal().setConstant(std::numeric_limits<double>::quiet_NaN());
  return C;
}

double quantile_sorted(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw Error(ErrorCode::DomainError, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Matrix equal_time_draws(const PosteriorDraws& draws, const BasisMatrix& basis, Index t) {
  check_dims(draws, basis);
  const auto scaled = scaled_c(draws);
  return weighted_sum(scaled, basis.phi.col(t).array().square().matrix().transpose());
}

CrossCovFunction summarize_values(const std::vector<Matrix>& values_per_t, Index p, double ci_level) {
  CrossCovFunction out;
  out.p = p;
  out.T = static_cast<Index>(values_per_t.size());
  out.ci_level = ci_level;
  const Index npairs = pair_count(p);
  out.mean.resize(out.T, npairs);
  out.lower.resize(out.T, npairs);
  out.upper.resize(out.T, npairs);
  for (Index t = 0; t < out.T; ++t) {
    const Matrix& values = values_per_t[static_cast<std::size_t>(t)];
    if (values.cols() != npairs || values.rows() < 1)
      throw Error(ErrorCode::DimensionMismatch, "draw matrix must be M x p(p-1)/2");
    summarize_slice(values, ci_level, t, out);
  }
  return out;
}

CrossCovFunction summarize(const PosteriorDraws& draws, const BasisMatrix& basis, double ci_level, int workers) {
  check_dims(draws, basis);
  if (draws.M() < 2) throw Error(ErrorCode::DomainError, "summaries need at least two draws");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw Error(ErrorCode::InvalidConfig, "ci_level must lie in (0, 1)");
  const auto scaled = scaled_c(draws);
  const Matrix squared = basis.phi.array().square();  // K x T
  CrossCovFunction out;
  out.p = draws.p;
  out.T = basis.T();
  out.ci_level = ci_level;
  const Index npairs = pair_count(draws.p);
  out.mean.resize(out.T, npairs);
  out.lower.resize(out.T, npairs);
  out.upper.resize(out.T, npairs);
  // each slice writes only its own row
  parallel_for(out.T, workers, [&](Index t) {
    const Matrix values = weighted_sum(scaled, squared.col(t).transpose());
    summarize_slice(values, ci_level, t, out);
  });
  return out;
}

bool EdgeFunction::has_edge(Index t, Index j, Index l) const {
  if (j == l) return false;
  if (j > l) std::swap(j, l);
  return selected(t, pair_index(j, l, p));
}

std::vector<std::pair<Index, Index>> EdgeFunction::edges_at(Index t) const {
  std::vector<std::pair<Index, Index>> out;
  for (Index j = 0; j < p; ++j)
    for (Index l = j + 1; l < p; ++l)
      if (selected(t, pair_index(j, l, p))) out.emplace_back(j, l);
  return out;
}

EdgeFunction select_edges(const CrossCovFunction& summary) {
  EdgeFunction out;
  out.p = summary.p;
  out.T = summary.T;
  out.lower = summary.lower;
  out.upper = summary.upper;
  // 0 not in the open interval (lb, ub)
  out.selected = (summary.lower.array() >= 0.0) || (summary.upper.array() <= 0.0);
  return out;
}

Vector lagged_profile(const PosteriorDraws& draws, const BasisMatrix& basis, Index j, Index l, Index t,
                      const std::vector<Index>& tprimes) {
  check_dims(draws, basis);
  const Index p = draws.p;
  if (j == l || j < 0 || l < 0 || j >= p || l >= p) throw Error(ErrorCode::DimensionMismatch, "invalid pair");
  if (t < 0 || t >= basis.T()) throw Error(ErrorCode::DimensionMismatch, "grid index out of range");
  if (j > l) std::swap(j, l);  // C_jl(t,t') = C_lj(t,t') per draw
  const Index q = pair_index(j, l, p);
  Vector mean_ratio(draws.K());
  for (Index k = 0; k < draws.K(); ++k) {
    const ChainDraws& ch = draws.chains[static_cast<std::size_t>(k)];
    mean_ratio(k) = (ch.c.col(q).array() / (ch.s.col(j).array() * ch.s.col(l).array())).mean();
  }
  Vector out(static_cast<Index>(tprimes.size()));
  for (std::size_t i = 0; i < tprimes.size(); ++i) {
    const Index tp = tprimes[i];
    if (tp < 0 || tp >= basis.T()) throw Error(ErrorCode::DimensionMismatch, "grid index out of range");
    out(static_cast<Index>(i)) = (basis.phi.col(t).array() * basis.phi.col(tp).array() * mean_ratio.array()).sum();
  }
  return out;
}

Matrix normalized_cross_cov(const PosteriorDraws& draws, const BasisMatrix& basis, const CrossCovFunction& summary) {
  check_dims(draws, basis);
  const Index p = draws.p, K = draws.K();
  Matrix inv_s2(K, p);
  for (Index k = 0; k < K; ++k)
    inv_s2.row(k) = draws.chains[static_cast<std::size_t>(k)].s.array().square().inverse().colwise().mean();
  const Matrix squared = basis.phi.array().square();  // K x T
  const Matrix marginal = squared.transpose() * inv_s2;  // T x p
  Matrix out(summary.T, pair_count(p));
  for (Index t = 0; t < summary.T; ++t)
    for (Index j = 0; j < p; ++j)
      for (Index l = j + 1; l < p; ++l) {
        const Index q = pair_index(j, l, p);
        out(t, q) = summary.mean(t, q) / std::sqrt(std::abs(marginal(t, j)) * std::abs(marginal(t, l)));
      }
  return out;
}

}  // namespace fungraph
