#pragma once

#include "fungraph/basis.hpp"
#include "fungraph/dataspace.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace fungraph {

enum class Autocorrelation { AR1, ChangePoint };

Autocorrelation parse_autocorrelation(const std::string& name);
std::string to_string(Autocorrelation a);

using PairList = std::vector<std::pair<Index, Index>>;  // 0-based, j < l

struct ScenarioConfig {
  Autocorrelation autocorrelation = Autocorrelation::AR1;
  int dynamic = 1;  // 1: crossing sin^2/cos^2 paths, 2: linear ramps with plateaus
  Index n = 50;
  Index p = 10;
  Index T = 128;
  std::uint64_t seed = 1;

  double ar_coeff = 0.7;   // A = ar_coeff * I
  double cp_coeff1 = 1.0;  // A1 = cp_coeff1 * I
  double cp_coeff2 = 1.0;  // A2 = cp_coeff2 * I
  Index t0 = -1;           // change point on the 1-based grid; -1 selects T/2
  int burn_in = 200;       // AR(1) steps discarded before t = 1

  double e1_level = 0.4;
  double peak_level = 0.6;
  double presence_threshold = 0.05;
  PairList e1, e2, e3;  // empty selects the default path-graph memberships

  int workers = 1;

  // Fills empty memberships and t0 with their defaults, then checks invariants.
  void resolve();
  void validate() const;
  Index change_point() const { return t0 < 0 ? T / 2 : t0; }
};

// Default memberships over a path 1-2-...-p: alternating links are static (E1),
// the remaining links alternate between E2 and E3.
void default_edge_sets(Index p, PairList& e1, PairList& e2, PairList& e3);

// Partial-correlation levels of the E2 and E3 edges at 1-based grid point t.
double e2_level(const ScenarioConfig& cfg, Index t);
double e3_level(const ScenarioConfig& cfg, Index t);

// Unit-diagonal noise precision with -level off the diagonal on each edge.
Matrix noise_precision(const ScenarioConfig& cfg, Index t);
// Sigma_t = inverse of noise_precision; throws NotPositiveDefinite.
Matrix noise_covariance(const ScenarioConfig& cfg, Index t);

struct TruthGraph {
  Index p = 0;
  Index T = 0;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> present;  // T x npairs
  Matrix level;                                                 // T x npairs partial correlations

  bool has_edge(Index t, Index j, Index l) const;
  Index edge_count(Index t) const { return present.row(t).count(); }
};

TruthGraph truth_graph(const ScenarioConfig& cfg);

struct SimulatedData {
  FunctionalDataset data;
  TruthGraph truth;
};

// n independent subjects; subject i draws from its own stream of cfg.seed.
SimulatedData generate(ScenarioConfig cfg);

struct EdgeRates {
  double imtpr = 0.0;
  double imfpr = 0.0;
};

EdgeRates imtpr_imfpr(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& selected, const TruthGraph& truth);
EdgeRates imtpr_imfpr(const EdgeFunction& estimate, const TruthGraph& truth);

struct RocCurve {
  std::vector<double> threshold;  // +inf for the (0, 0) endpoint
  std::vector<double> fpr;
  std::vector<double> tpr;
  double auc = 0.0;
};

// Pooled over (t, pair): scores is T x npairs, larger means more edge-like.
RocCurve roc_points(const Matrix& scores, const TruthGraph& truth);

}  // namespace fungraph
