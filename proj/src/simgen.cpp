#include "fungraph/simgen.hpp"

#include "fungraph/graphmodel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <thread>

namespace fungraph {

namespace {

constexpr std::uint64_t kSubjectStage = 0x73;

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

void check_pairs(const PairList& pairs, Index p, const char* name) {
  for (const auto& [j, l] : pairs)
    if (!(j >= 0 && l > j && l < p))
      throw Error(ErrorCode::InvalidConfig, std::string(name) + " holds a pair outside 0 <= j < l < p");
}

}  // namespace

Autocorrelation parse_autocorrelation(const std::string& name) {
  if (name == "ar1") return Autocorrelation::AR1;
  if (name == "changepoint") return Autocorrelation::ChangePoint;
  throw Error(ErrorCode::InvalidConfig, "unknown scenario '" + name + "' (expected ar1 or changepoint)");
}

std::string to_string(Autocorrelation a) { return a == Autocorrelation::AR1 ? "ar1" : "changepoint"; }

void default_edge_sets(Index p, PairList& e1, PairList& e2, PairList& e3) {
  e1.clear();
  e2.clear();
  e3.clear();
  // links (0,1), (2,3), ... are static; odd links alternate between E2 and E3
  for (Index j = 0; j + 1 < p; ++j) {
    if (j % 2 == 0)
      e1.emplace_back(j, j + 1);
    else if ((j / 2) % 2 == 0)
      e2.emplace_back(j, j + 1);
    else
      e3.emplace_back(j, j + 1);
  }
}

void ScenarioConfig::resolve() {
  if (e1.empty() && e2.empty() && e3.empty()) default_edge_sets(p, e1, e2, e3);
  if (t0 < 0) t0 = T / 2;
  validate();
}

void ScenarioConfig::validate() const {
  if (n < 1) throw Error(ErrorCode::InvalidConfig, "n must be >= 1");
  if (p < 2) throw Error(ErrorCode::InvalidConfig, "p must be >= 2");
  if (T < 2) throw Error(ErrorCode::InvalidConfig, "T must be >= 2");
  if (dynamic != 1 && dynamic != 2) throw Error(ErrorCode::InvalidConfig, "dynamic must be 1 or 2");
  if (!(std::abs(ar_coeff) < 1.0)) throw Error(ErrorCode::InvalidConfig, "|ar_coeff| must be < 1");
  if (!std::isfinite(cp_coeff1) || !std::isfinite(cp_coeff2))
    throw Error(ErrorCode::InvalidConfig, "change-point coefficients must be finite");
  if (t0 >= 0 && (t0 < 1 || t0 >= T)) throw Error(ErrorCode::InvalidConfig, "t0 must lie in [1, T-1]");
  if (burn_in < 0) throw Error(ErrorCode::InvalidConfig, "burn_in must be >= 0");
  if (!(std::abs(e1_level) < 1.0 && std::abs(peak_level) < 1.0))
    throw Error(ErrorCode::InvalidConfig, "correlation levels must lie in (-1, 1)");
  if (!(presence_threshold >= 0.0)) throw Error(ErrorCode::InvalidConfig, "presence_threshold must be >= 0");
  if (workers < 1) throw Error(ErrorCode::InvalidConfig, "workers must be >= 1");
  check_pairs(e1, p, "E1");
  check_pairs(e2, p, "E2");
  check_pairs(e3, p, "E3");
  std::set<std::pair<Index, Index>> seen;
  for (const PairList* set : {&e1, &e2, &e3})
    for (const auto& e : *set)
      if (!seen.insert(e).second) throw Error(ErrorCode::InvalidConfig, "edge sets must be disjoint");
}

double e2_level(const ScenarioConfig& cfg, Index t) {
  const double T = static_cast<double>(cfg.T);
  if (cfg.dynamic == 1) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(t) / T);
    return cfg.peak_level * s * s;
  }
  const double u = static_cast<double>(t - 1) / (T - 1.0);
  return cfg.peak_level * clamp01((u - 0.25) / 0.5);
}

double e3_level(const ScenarioConfig& cfg, Index t) {
  const double T = static_cast<double>(cfg.T);
  if (cfg.dynamic == 1) {
    const double c = std::cos(std::numbers::pi * static_cast<double>(t) / T);
    return cfg.peak_level * c * c;
  }
  const double u = static_cast<double>(t - 1) / (T - 1.0);
  return cfg.peak_level * clamp01((0.75 - u) / 0.5);
}

Matrix noise_precision(const ScenarioConfig& cfg, Index t) {
  Matrix omega = Matrix::Identity(cfg.p, cfg.p);
  auto place = [&](const PairList& set, double level) {
    for (const auto& [j, l] : set) omega(j, l) = omega(l, j) = -level;
  };
  place(cfg.e1, cfg.e1_level);
  place(cfg.e2, e2_level(cfg, t));
  place(cfg.e3, e3_level(cfg, t));
  return omega;
}

Matrix noise_covariance(const ScenarioConfig& cfg, Index t) {
  const Matrix omega = noise_precision(cfg, t);
  if (!is_positive_definite(omega))
    throw Error(ErrorCode::NotPositiveDefinite, "noise precision at t=" + std::to_string(t) + " is not positive definite");
  return omega.llt().solve(Matrix::Identity(cfg.p, cfg.p));
}

bool TruthGraph::has_edge(Index t, Index j, Index l) const {
  if (j == l) return false;
  if (j > l) std::swap(j, l);
  return present(t, pair_index(j, l, p));
}

TruthGraph truth_graph(const ScenarioConfig& cfg) {
  TruthGraph g;
  g.p = cfg.p;
  g.T = cfg.T;
  const Index npairs = pair_count(cfg.p);
  g.level = Matrix::Zero(cfg.T, npairs);
  for (Index t = 0; t < cfg.T; ++t) {
    for (const auto& [j, l] : cfg.e1) g.level(t, pair_index(j, l, cfg.p)) = cfg.e1_level;
    for (const auto& [j, l] : cfg.e2) g.level(t, pair_index(j, l, cfg.p)) = e2_level(cfg, t + 1);
    for (const auto& [j, l] : cfg.e3) g.level(t, pair_index(j, l, cfg.p)) = e3_level(cfg, t + 1);
  }
  g.present = g.level.array().abs() > cfg.presence_threshold;
  return g;
}

SimulatedData generate(ScenarioConfig cfg) {
  cfg.resolve();
  const Index n = cfg.n, p = cfg.p, T = cfg.T;
  // lower factors of every Sigma_t, checked before any sampling
  std::vector<Matrix> factor(static_cast<std::size_t>(T));
  for (Index t = 0; t < T; ++t) factor[static_cast<std::size_t>(t)] = noise_covariance(cfg, t + 1).llt().matrixL();

  std::vector<Matrix> subjects(static_cast<std::size_t>(n));
  auto simulate_subject = [&](Index i) {
    Rng rng(stream_seed(cfg.seed, kSubjectStage, static_cast<std::uint64_t>(i)));
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&](Vector& z) {
      for (Index j = 0; j < p; ++j) z(j) = normal(rng);
    };
    Matrix Y(p, T);
    Vector z(p);
    if (cfg.autocorrelation == Autocorrelation::AR1) {
      Vector y = Vector::Zero(p);
      for (int b = 0; b < cfg.burn_in; ++b) {
        draw(z);
        y = cfg.ar_coeff * y + factor.front() * z;
      }
      for (Index t = 0; t < T; ++t) {
        draw(z);
        y = cfg.ar_coeff * y + factor[static_cast<std::size_t>(t)] * z;
        Y.col(t) = y;
      }
    } else {
      Vector x1(p), x2(p);
      draw(x1);
      draw(x2);
      const Index t0 = cfg.change_point();
      for (Index t = 0; t < T; ++t) {
        draw(z);
        const Vector mean = (t + 1 <= t0) ? Vector(cfg.cp_coeff1 * x1) : Vector(cfg.cp_coeff2 * x2);
        Y.col(t) = mean + factor[static_cast<std::size_t>(t)] * z;
      }
    }
    subjects[static_cast<std::size_t>(i)] = std::move(Y);
  };

  if (cfg.workers <= 1) {
    for (Index i = 0; i < n; ++i) simulate_subject(i);
  } else {
    std::atomic<Index> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min<int>(cfg.workers, static_cast<int>(n)); ++w)
      pool.emplace_back([&]() {
        for (Index i = next++; i < n; i = next++) simulate_subject(i);
      });
    for (auto& th : pool) th.join();
  }
  return {FunctionalDataset(std::move(subjects)), truth_graph(cfg)};
}

EdgeRates imtpr_imfpr(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& selected, const TruthGraph& truth) {
  if (selected.rows() != truth.T || selected.cols() != truth.present.cols())
    throw Error(ErrorCode::DimensionMismatch, "estimate and truth cover different (T, pairs)");
  const Index npairs = truth.present.cols();
  double tpr_sum = 0.0, fpr_sum = 0.0;
  Index tpr_count = 0, fpr_count = 0;
  for (Index t = 0; t < truth.T; ++t) {
    Index true_edges = 0, hits = 0, false_hits = 0;
    for (Index q = 0; q < npairs; ++q) {
      const bool e = truth.present(t, q);
      true_edges += e;
      hits += e && selected(t, q);
      false_hits += !e && selected(t, q);
    }
    if (true_edges > 0) {
      tpr_sum += static_cast<double>(hits) / static_cast<double>(true_edges);
      ++tpr_count;
    }
    if (true_edges < npairs) {
      fpr_sum += static_cast<double>(false_hits) / static_cast<double>(npairs - true_edges);
      ++fpr_count;
    }
  }
  return {tpr_count ? tpr_sum / static_cast<double>(tpr_count) : 0.0,
          fpr_count ? fpr_sum / static_cast<double>(fpr_count) : 0.0};
}

EdgeRates imtpr_imfpr(const EdgeFunction& estimate, const TruthGraph& truth) {
  if (estimate.p != truth.p) throw Error(ErrorCode::DimensionMismatch, "estimate and truth have different p");
  return imtpr_imfpr(estimate.selected, truth);
}

RocCurve roc_points(const Matrix& scores, const TruthGraph& truth) {
  if (scores.rows() != truth.T || scores.cols() != truth.present.cols())
    throw Error(ErrorCode::DimensionMismatch, "scores and truth cover different (T, pairs)");
  if (!scores.allFinite()) throw Error(ErrorCode::DomainError, "scores must be finite");
  struct Item {
    double score;
    bool label;
  };
  std::vector<Item> items;
  items.reserve(static_cast<std::size_t>(scores.size()));
  double positives = 0.0, negatives = 0.0;
  for (Index t = 0; t < scores.rows(); ++t)
    for (Index q = 0; q < scores.cols(); ++q) {
      const bool e = truth.present(t, q);
      items.push_back({scores(t, q), e});
      (e ? positives : negatives) += 1.0;
    }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score > b.score; });

  RocCurve roc;
  roc.threshold.push_back(std::numeric_limits<double>::infinity());
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < items.size();) {
    const double thr = items[i].score;
    for (; i < items.size() && items[i].score == thr; ++i) (items[i].label ? tp : fp) += 1.0;
    roc.threshold.push_back(thr);
    roc.fpr.push_back(negatives > 0 ? fp / negatives : 1.0);
    roc.tpr.push_back(positives > 0 ? tp / positives : 1.0);
  }
  // a tied block contributes a straight segment, i.e. half credit
  for (std::size_t i = 1; i < roc.fpr.size(); ++i)
    roc.auc += (roc.fpr[i] - roc.fpr[i - 1]) * 0.5 * (roc.tpr[i] + roc.tpr[i - 1]);
  return roc;
}

}  // namespace fungraph
