#pragma once

#include "fungraph/common.hpp"

#include <optional>
#include <vector>

namespace fungraph {

// n subjects x p variables x T grid points. Each subject is stored as a p x T
// matrix whose rows are the observed curves.
class FunctionalDataset {
 public:
  FunctionalDataset() = default;
  FunctionalDataset(Index n, Index p, Index T);
  explicit FunctionalDataset(std::vector<Matrix> subjects, Vector grid = {});

  Index n() const { return static_cast<Index>(subjects_.size()); }
  Index p() const { return subjects_.empty() ? 0 : subjects_.front().rows(); }
  Index T() const { return subjects_.empty() ? 0 : subjects_.front().cols(); }

  const Matrix& subject(Index i) const { return subjects_[static_cast<std::size_t>(i)]; }
  Matrix& subject(Index i) { return subjects_[static_cast<std::size_t>(i)]; }
  double operator()(Index i, Index j, Index t) const { return subject(i)(j, t); }
  double& operator()(Index i, Index j, Index t) { return subject(i)(j, t); }

  const Vector& grid() const { return grid_; }

  // Throws DataError unless n >= 1, p >= 2, T >= 2, all values finite and the
  // grid strictly increasing.
  void validate() const;

 private:
  std::vector<Matrix> subjects_;
  Vector grid_;
};

enum class BasisKind { WaveletDb2, Fourier, Identity, External };

BasisKind parse_basis_kind(const std::string& name);
std::string to_string(BasisKind kind);

struct BasisSpec {
  BasisKind kind = BasisKind::WaveletDb2;
  int levels = 3;
  double energy_keep = 1.0;
  double epsilon = 1e-6;
  std::optional<Matrix> external;  // K x T, required for BasisKind::External

  void validate() const;
};

// K x T basis matrix and its right pseudo-inverse factor.
struct BasisMatrix {
  Matrix phi;          // K x T
  Matrix pinv_factor;  // T x K, phi' (phi phi')^{-1}
  double dropped_energy = 0.0;
  std::vector<Index> retained;  // rows of the untruncated basis kept, in order

  Index K() const { return phi.rows(); }
  Index T() const { return phi.cols(); }
};

// Coefficients y*, stored per basis index as n x p slabs.
struct BasisCoefficients {
  std::vector<Matrix> slabs;

  Index K() const { return static_cast<Index>(slabs.size()); }
  Index n() const { return slabs.empty() ? 0 : slabs.front().rows(); }
  Index p() const { return slabs.empty() ? 0 : slabs.front().cols(); }
  const Matrix& slab(Index k) const { return slabs[static_cast<std::size_t>(k)]; }
};

// Periodic orthonormal Daubechies-2 analysis of one signal; the output holds
// [approximation at the coarsest level, details coarsest..finest].
Vector dwt_db2_periodic(const Vector& signal, int levels);

// Pseudo-inverse factor phi' (phi phi')^{-1} through an SVD with relative
// singular-value cutoff 1e-12. Throws RankDeficient if rank(phi) < rows.
Matrix right_pseudo_inverse(const Matrix& phi);

BasisMatrix build_basis(const BasisSpec& spec, Index T);

// Keeps the smallest set of basis rows (ranked by energy summed over all
// curves) whose energy reaches energy_keep of the total.
BasisMatrix truncate_basis(const BasisMatrix& full, const FunctionalDataset& data, double energy_keep);

BasisCoefficients to_basis_space(const FunctionalDataset& data, const BasisMatrix& basis);
FunctionalDataset reconstruct(const BasisCoefficients& coeffs, const BasisMatrix& basis);

struct LosslessReport {
  Matrix relative_error;  // n x p
  double max_error = 0.0;
  std::vector<std::pair<Index, Index>> flagged;  // (subject, variable) above epsilon
  bool lossy() const { return !flagged.empty(); }
};

LosslessReport check_lossless(const FunctionalDataset& data, const BasisMatrix& basis, double epsilon);

}  // namespace fungraph
