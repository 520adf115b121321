#include "fungraph/basis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace fungraph {

FunctionalDataset::FunctionalDataset(Index n, Index p, Index T)
    : subjects_(static_cast<std::size_t>(n), Matrix::Zero(p, T)),
      grid_(Vector::LinSpaced(T, 1.0, static_cast<double>(T))) {}

FunctionalDataset::FunctionalDataset(std::vector<Matrix> subjects, Vector grid)
    : subjects_(std::move(subjects)), grid_(std::move(grid)) {
  if (grid_.size() == 0 && !subjects_.empty()) {
    grid_ = Vector::LinSpaced(T(), 1.0, static_cast<double>(T()));
  }
}

void FunctionalDataset::validate() const {
  if (n() < 1) throw Error(ErrorCode::DataError, "dataset needs at least one subject");
  if (p() < 2) throw Error(ErrorCode::DataError, "dataset needs at least two variables");
  if (T() < 2) throw Error(ErrorCode::DataError, "dataset needs at least two grid points");
  for (const auto& y : subjects_) {
    if (y.rows() != p() || y.cols() != T())
      throw Error(ErrorCode::DimensionMismatch, "subjects have inconsistent shapes");
    if (!y.allFinite()) throw Error(ErrorCode::DataError, "non-finite observation");
  }
  if (grid_.size() != T()) throw Error(ErrorCode::DimensionMismatch, "grid length differs from T");
  for (Index t = 1; t < T(); ++t) {
    if (!(grid_(t) > grid_(t - 1))) throw Error(ErrorCode::DataError, "grid is not strictly increasing");
  }
}

BasisKind parse_basis_kind(const std::string& name) {
  if (name == "wavelet-db2") return BasisKind::WaveletDb2;
  if (name == "fourier") return BasisKind::Fourier;
  if (name == "identity") return BasisKind::Identity;
  if (name == "external" || name == "external-matrix") return BasisKind::External;
  throw Error(ErrorCode::InvalidConfig, "unknown basis kind '" + name + "'");
}

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::WaveletDb2: return "wavelet-db2";
    case BasisKind::Fourier: return "fourier";
    case BasisKind::Identity: return "identity";
    case BasisKind::External: return "external";
  }
  return "unknown";
}

void BasisSpec::validate() const {
  if (!(energy_keep > 0.0 && energy_keep <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "energy_keep must lie in (0, 1]");
  if (kind == BasisKind::WaveletDb2 && levels < 1)
    throw Error(ErrorCode::InvalidConfig, "wavelet basis needs levels >= 1");
  if (kind == BasisKind::External && !external)
    throw Error(ErrorCode::InvalidConfig, "external basis requires a matrix");
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidConfig, "epsilon must be nonnegative");
}

namespace {

struct Db2Filters {
  std::array<double, 4> low;
  std::array<double, 4> high;
};

Db2Filters db2_filters() {
  const double s3 = std::sqrt(3.0);
  const double norm = 4.0 * std::sqrt(2.0);
  Db2Filters f{};
  f.low = {(1 + s3) / norm, (3 + s3) / norm, (3 - s3) / norm, (1 - s3) / norm};
  for (int m = 0; m < 4; ++m) f.high[m] = (m % 2 == 0 ? 1.0 : -1.0) * f.low[3 - m];
  return f;
}

Matrix fourier_rows(Index T) {
  Matrix phi(T, T);
  const double pi = std::acos(-1.0);
  const double T_d = static_cast<double>(T);
  Index row = 0;
  phi.row(row++).setConstant(1.0 / std::sqrt(T_d));
  for (Index m = 1; 2 * m < T; ++m) {
    for (Index t = 0; t < T; ++t) {
      const double angle = 2.0 * pi * static_cast<double>(m * t) / T_d;
      phi(row, t) = std::sqrt(2.0 / T_d) * std::cos(angle);
      phi(row + 1, t) = std::sqrt(2.0 / T_d) * std::sin(angle);
    }
    row += 2;
  }
  if (T % 2 == 0) {
    for (Index t = 0; t < T; ++t) phi(row, t) = (t % 2 == 0 ? 1.0 : -1.0) / std::sqrt(T_d);
    ++row;
  }
  return phi;
}

}  // namespace

Vector dwt_db2_periodic(const Vector& signal, int levels) {
  const Index T = signal.size();
  if (levels < 1 || T % (Index{1} << levels) != 0)
    throw Error(ErrorCode::IncompatibleGrid,
                "length " + std::to_string(T) + " is not a multiple of 2^" + std::to_string(levels));
  const auto f = db2_filters();
  Vector out(T);
  Vector approx = signal;
  for (int level = 0; level < levels; ++level) {
    const Index N = approx.size();
    const Index half = N / 2;
    Vector a(half), d(half);
    for (Index i = 0; i < half; ++i) {
      double sa = 0.0, sd = 0.0;
      for (Index m = 0; m < 4; ++m) {
        const double x = approx((2 * i + m) % N);
        sa += f.low[static_cast<std::size_t>(m)] * x;
        sd += f.high[static_cast<std::size_t>(m)] * x;
      }
      a(i) = sa;
      d(i) = sd;
    }
    // details of this level occupy [half, N) of the running buffer
    out.segment(half, half) = d;
    approx = a;
  }
  out.head(approx.size()) = approx;
  return out;
}

Matrix right_pseudo_inverse(const Matrix& phi) {
  Eigen::JacobiSVD<Matrix> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cutoff = 1e-12 * (sv.size() > 0 ? sv(0) : 0.0);
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i) rank += sv(i) > cutoff ? 1 : 0;
  if (rank < phi.rows())
    throw Error(ErrorCode::RankDeficient,
                "basis matrix has rank " + std::to_string(rank) + " < " + std::to_string(phi.rows()));
  // phi = U S V'  =>  phi' (phi phi')^{-1} = V S^{-1} U'
  return svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
}

BasisMatrix build_basis(const BasisSpec& spec, Index T) {
  spec.validate();
  if (T < 1) throw Error(ErrorCode::IncompatibleGrid, "grid length must be positive");
  BasisMatrix basis;
  switch (spec.kind) {
    case BasisKind::Identity:
      basis.phi = Matrix::Identity(T, T);
      break;
    case BasisKind::Fourier:
      basis.phi = fourier_rows(T);
      break;
    case BasisKind::WaveletDb2: {
      if (T % (Index{1} << spec.levels) != 0)
        throw Error(ErrorCode::IncompatibleGrid, "wavelet basis needs T a multiple of 2^levels (T=" +
                                                     std::to_string(T) + ", levels=" +
                                                     std::to_string(spec.levels) + ")");
      // Columns of the analysis matrix W are transforms of unit vectors; W is
      // orthonormal, so the synthesis rows are the rows of W.
      Matrix W(T, T);
      for (Index t = 0; t < T; ++t) W.col(t) = dwt_db2_periodic(Vector::Unit(T, t), spec.levels);
      basis.phi = std::move(W);
      break;
    }
    case BasisKind::External: {
      const Matrix& ext = *spec.external;
      if (ext.cols() != T)
        throw Error(ErrorCode::DimensionMismatch, "external basis has " + std::to_string(ext.cols()) +
                                                      " columns, data has T=" + std::to_string(T));
      if (ext.rows() > T) throw Error(ErrorCode::RankDeficient, "external basis has K > T");
      if (!ext.allFinite()) throw Error(ErrorCode::DataError, "external basis has non-finite entries");
      basis.phi = ext;
      break;
    }
  }
  basis.pinv_factor = right_pseudo_inverse(basis.phi);
  basis.retained.resize(static_cast<std::size_t>(basis.K()));
  std::iota(basis.retained.begin(), basis.retained.end(), Index{0});
  return basis;
}

BasisMatrix truncate_basis(const BasisMatrix& full, const FunctionalDataset& data, double energy_keep) {
  if (!(energy_keep > 0.0 && energy_keep <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "energy_keep must lie in (0, 1]");
  if (data.T() != full.T()) throw Error(ErrorCode::DimensionMismatch, "data T differs from basis T");
  if (energy_keep == 1.0) return full;

  Vector energy = Vector::Zero(full.K());
  for (Index i = 0; i < data.n(); ++i) {
    const Matrix coeffs = data.subject(i) * full.pinv_factor;  // p x K
    energy += coeffs.colwise().squaredNorm().transpose();
  }
  const double total = energy.sum();

  std::vector<Index> order(static_cast<std::size_t>(full.K()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return energy(a) > energy(b); });

  std::vector<Index> keep;
  double kept = 0.0;
  for (Index k : order) {
    if (total > 0.0 && kept >= energy_keep * total) break;
    keep.push_back(k);
    kept += energy(k);
  }
  std::sort(keep.begin(), keep.end());

  BasisMatrix out;
  out.phi.resize(static_cast<Index>(keep.size()), full.T());
  for (std::size_t r = 0; r < keep.size(); ++r) out.phi.row(static_cast<Index>(r)) = full.phi.row(keep[r]);
  out.pinv_factor = right_pseudo_inverse(out.phi);
  out.dropped_energy = total > 0.0 ? std::max(0.0, (total - kept) / total) : 0.0;
  for (Index k : keep) out.retained.push_back(full.retained.empty() ? k : full.retained[static_cast<std::size_t>(k)]);
  return out;
}

BasisCoefficients to_basis_space(const FunctionalDataset& data, const BasisMatrix& basis) {
  if (data.T() != basis.T())
    throw Error(ErrorCode::DimensionMismatch,
                "data T=" + std::to_string(data.T()) + " but basis T=" + std::to_string(basis.T()));
  const Index n = data.n(), p = data.p(), K = basis.K();
  BasisCoefficients out;
  out.slabs.assign(static_cast<std::size_t>(K), Matrix(n, p));
  for (Index i = 0; i < n; ++i) {
    const Matrix ystar = data.subject(i) * basis.pinv_factor;  // p x K
    for (Index k = 0; k < K; ++k) out.slabs[static_cast<std::size_t>(k)].row(i) = ystar.col(k).transpose();
  }
  return out;
}

FunctionalDataset reconstruct(const BasisCoefficients& coeffs, const BasisMatrix& basis) {
  if (coeffs.K() != basis.K())
    throw Error(ErrorCode::DimensionMismatch,
                "coefficients have K=" + std::to_string(coeffs.K()) + " but basis K=" + std::to_string(basis.K()));
  const Index n = coeffs.n(), p = coeffs.p(), K = coeffs.K();
  std::vector<Matrix> subjects(static_cast<std::size_t>(n));
  Matrix ystar(p, K);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < K; ++k) ystar.col(k) = coeffs.slab(k).row(i).transpose();
    subjects[static_cast<std::size_t>(i)] = ystar * basis.phi;
  }
  return FunctionalDataset(std::move(subjects));
}

LosslessReport check_lossless(const FunctionalDataset& data, const BasisMatrix& basis, double epsilon) {
  if (data.T() != basis.T()) throw Error(ErrorCode::DimensionMismatch, "data T differs from basis T");
  const Matrix projector = basis.pinv_factor * basis.phi;  // T x T
  LosslessReport report;
  report.relative_error.resize(data.n(), data.p());
  for (Index i = 0; i < data.n(); ++i) {
    const Matrix& y = data.subject(i);
    const Matrix residual = y - y * projector;
    for (Index j = 0; j < data.p(); ++j) {
      const double norm = y.row(j).norm();
      const double err = residual.row(j).norm();
      const double rel = norm > 0.0 ? err / norm : err;
      report.relative_error(i, j) = rel;
      report.max_error = std::max(report.max_error, rel);
      if (rel > epsilon) report.flagged.emplace_back(i, j);
    }
  }
  return report;
}

}  // namespace fungraph
