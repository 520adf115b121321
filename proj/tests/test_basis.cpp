#include "fungraph/basis.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace fungraph;

namespace {

// Analysis matrix of one periodic two-channel stage, built row by row.
Matrix filter_stage(Index N, const double* taps) {
  Matrix A = Matrix::Zero(N / 2, N);
  for (Index i = 0; i < N / 2; ++i)
    for (Index m = 0; m < 4; ++m) A(i, (2 * i + m) % N) += taps[m];
  return A;
}

Matrix filter_bank(Index T, int levels) {
  const double s3 = std::sqrt(3.0), norm = 4.0 * std::sqrt(2.0);
  const double h[4] = {(1 + s3) / norm, (3 + s3) / norm, (3 - s3) / norm, (1 - s3) / norm};
  const double g[4] = {h[3], -h[2], h[1], -h[0]};
  if (levels == 0) return Matrix::Identity(T, T);
  const Matrix low = filter_stage(T, h), high = filter_stage(T, g);
  const Matrix inner = filter_bank(T / 2, levels - 1);
  Matrix W(T, T);
  W << inner * low, high;
  return W;
}

FunctionalDataset random_dataset(Index n, Index p, Index T, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  FunctionalDataset d(n, p, T);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j)
      for (Index t = 0; t < T; ++t) d(i, j, t) = z(rng);
  return d;
}

}  // namespace

TEST_CASE("identity basis is the identity matrix") {
  BasisSpec spec;
  spec.kind = BasisKind::Identity;
  const BasisMatrix b = build_basis(spec, 4);
  CHECK(b.phi.isApprox(Matrix::Identity(4, 4)));
  CHECK(b.K() == 4);
}

TEST_CASE("db2 analysis matches an explicit filter bank") {
  for (int levels : {1, 2, 3}) {
    BasisSpec spec;
    spec.levels = levels;
    const Index T = 16;
    const BasisMatrix b = build_basis(spec, T);
    const Matrix oracle = filter_bank(T, levels);
    CHECK((b.phi - oracle).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("single-level db2 on T=8 is orthonormal") {
  BasisSpec spec;
  spec.levels = 1;
  const BasisMatrix b = build_basis(spec, 8);
  CHECK((b.phi * b.phi.transpose() - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("non-dyadic wavelet grid is rejected") {
  BasisSpec spec;
  spec.levels = 3;
  try {
    build_basis(spec, 12);
    FAIL("expected IncompatibleGrid");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IncompatibleGrid);
  }
}

TEST_CASE("external basis with repeated rows is rank deficient") {
  Matrix ext(3, 4);
  ext << 1, 2, 3, 4, 1, 2, 3, 4, 0, 1, 0, 1;
  BasisSpec spec;
  spec.kind = BasisKind::External;
  spec.external = ext;
  try {
    build_basis(spec, 4);
    FAIL("expected RankDeficient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
  }
}

TEST_CASE("phi times its pseudo-inverse factor is the identity for every kind") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  Matrix ext(5, 16);
  for (Index r = 0; r < ext.rows(); ++r)
    for (Index c = 0; c < ext.cols(); ++c) ext(r, c) = z(rng);
  for (auto kind : {BasisKind::WaveletDb2, BasisKind::Fourier, BasisKind::Identity, BasisKind::External}) {
    BasisSpec spec;
    spec.kind = kind;
    spec.levels = 4;
    if (kind == BasisKind::External) spec.external = ext;
    const BasisMatrix b = build_basis(spec, 16);
    const Matrix prod = b.phi * b.pinv_factor;
    CHECK((prod - Matrix::Identity(b.K(), b.K())).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("fourier basis is orthonormal for odd and even T") {
  for (Index T : {7, 8}) {
    BasisSpec spec;
    spec.kind = BasisKind::Fourier;
    const BasisMatrix b = build_basis(spec, T);
    CHECK((b.phi * b.phi.transpose() - Matrix::Identity(T, T)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("identity basis leaves coefficients unchanged and round trips exactly") {
  const FunctionalDataset d = random_dataset(3, 2, 8, 1);
  BasisSpec spec;
  spec.kind = BasisKind::Identity;
  const BasisMatrix b = build_basis(spec, 8);
  const BasisCoefficients c = to_basis_space(d, b);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 2; ++j)
      for (Index t = 0; t < 8; ++t) CHECK(c.slab(t)(i, j) == d(i, j, t));
  const FunctionalDataset back = reconstruct(c, b);
  for (Index i = 0; i < 3; ++i) CHECK(back.subject(i) == d.subject(i));
  const LosslessReport r = check_lossless(d, b, 1e-12);
  CHECK(r.max_error == doctest::Approx(0.0));
  CHECK_FALSE(r.lossy());
}

TEST_CASE("orthonormal DWT preserves energy and round trips") {
  const FunctionalDataset d = random_dataset(4, 3, 32, 2);
  BasisSpec spec;
  spec.levels = 5;
  const BasisMatrix b = build_basis(spec, 32);
  const BasisCoefficients c = to_basis_space(d, b);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 3; ++j) {
      double coeff_energy = 0.0;
      for (Index k = 0; k < c.K(); ++k) coeff_energy += c.slab(k)(i, j) * c.slab(k)(i, j);
      CHECK(std::abs(coeff_energy - d.subject(i).row(j).squaredNorm()) < 1e-8);
    }
  const FunctionalDataset back = reconstruct(c, b);
  for (Index i = 0; i < 4; ++i) CHECK((back.subject(i) - d.subject(i)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(check_lossless(d, b, 1e-8).max_error < 1e-8);
}

TEST_CASE("projection residual matches a normal-equations least-squares solve") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  Matrix phi(3, 6);
  for (Index r = 0; r < 3; ++r)
    for (Index c = 0; c < 6; ++c) phi(r, c) = z(rng);
  BasisSpec spec;
  spec.kind = BasisKind::External;
  spec.external = phi;
  const BasisMatrix b = build_basis(spec, 6);
  const FunctionalDataset d = random_dataset(2, 2, 6, 5);
  const BasisCoefficients c = to_basis_space(d, b);
  const FunctionalDataset back = reconstruct(c, b);
  const LosslessReport report = check_lossless(d, b, 1e-6);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 2; ++j) {
      const Vector y = d.subject(i).row(j).transpose();
      // min_beta || y - phi' beta ||
      const Vector beta = (phi * phi.transpose()).ldlt().solve(phi * y);
      const Vector fitted = phi.transpose() * beta;
      CHECK((back.subject(i).row(j).transpose() - fitted).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(report.relative_error(i, j) == doctest::Approx((y - fitted).norm() / y.norm()).epsilon(1e-9));
    }
}

TEST_CASE("transform then reconstruct is idempotent") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> z;
  Matrix phi(4, 8);
  for (Index r = 0; r < 4; ++r)
    for (Index c = 0; c < 8; ++c) phi(r, c) = z(rng);
  BasisSpec spec;
  spec.kind = BasisKind::External;
  spec.external = phi;
  const BasisMatrix b = build_basis(spec, 8);
  const FunctionalDataset d = random_dataset(2, 2, 8, 6);
  const FunctionalDataset once = reconstruct(to_basis_space(d, b), b);
  const FunctionalDataset twice = reconstruct(to_basis_space(once, b), b);
  for (Index i = 0; i < 2; ++i) CHECK((once.subject(i) - twice.subject(i)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("truncation flags curves whose dropped energy exceeds epsilon squared") {
  // rough curves: most energy sits in the finest details
  const FunctionalDataset d = random_dataset(3, 2, 32, 9);
  BasisSpec spec;
  spec.levels = 3;
  const BasisMatrix full = build_basis(spec, 32);
  const BasisMatrix kept = truncate_basis(full, d, 0.9);
  CHECK(kept.K() < full.K());
  CHECK(kept.dropped_energy > 0.0);
  CHECK(kept.dropped_energy <= 0.1 + 1e-12);
  const double eps = 1e-3;
  const LosslessReport r = check_lossless(d, kept, eps);
  CHECK(r.lossy());
  // each relative error equals the dropped coefficient energy of that curve
  const BasisCoefficients c = to_basis_space(d, full);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 2; ++j) {
      double dropped = 0.0;
      for (Index k = 0; k < full.K(); ++k)
        if (std::find(kept.retained.begin(), kept.retained.end(), k) == kept.retained.end())
          dropped += c.slab(k)(i, j) * c.slab(k)(i, j);
      CHECK(r.relative_error(i, j) ==
            doctest::Approx(std::sqrt(dropped / d.subject(i).row(j).squaredNorm())).epsilon(1e-8));
    }
}

TEST_CASE("dropped energy is nonincreasing in energy_keep") {
  const FunctionalDataset d = random_dataset(3, 2, 32, 4);
  BasisSpec spec;
  spec.levels = 4;
  const BasisMatrix full = build_basis(spec, 32);
  double previous = 1.0;
  for (double keep : {0.3, 0.5, 0.7, 0.9, 0.99, 1.0}) {
    const BasisMatrix b = truncate_basis(full, d, keep);
    CHECK(b.dropped_energy <= previous + 1e-15);
    previous = b.dropped_energy;
  }
  CHECK(truncate_basis(full, d, 1.0).K() == full.K());
}

TEST_CASE("dataset validation") {
  FunctionalDataset d(1, 2, 4);
  CHECK_NOTHROW(d.validate());
  d(0, 1, 2) = std::nan("");
  CHECK_THROWS_AS(d.validate(), Error);
  CHECK_THROWS_AS(FunctionalDataset(1, 1, 4).validate(), Error);
  BasisSpec spec;
  spec.energy_keep = 0.0;
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("dimension mismatch between data and basis") {
  const FunctionalDataset d = random_dataset(1, 2, 8, 1);
  BasisSpec spec;
  spec.kind = BasisKind::Identity;
  try {
    to_basis_space(d, build_basis(spec, 16));
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}
