#include "fungraph/graphmodel.hpp"

namespace fungraph {

BasisGraphState::BasisGraphState(Index p, double lambda)
    : s_(Vector::Ones(p)), rho_(Matrix::Identity(p, p)), lambda_(lambda), chol_(Matrix::Identity(p, p)) {
  if (!(lambda > 0)) throw Error(ErrorCode::DomainError, "lambda must be positive");
}

BasisGraphState::BasisGraphState(Vector s, Matrix rho, double lambda)
    : s_(std::move(s)), rho_(std::move(rho)), lambda_(lambda) {
  const Index p = s_.size();
  if (rho_.rows() != p || rho_.cols() != p) throw Error(ErrorCode::DimensionMismatch, "rho must be p x p");
  if (!(s_.array() > 0).all()) throw Error(ErrorCode::DomainError, "s must be positive");
  if (!(lambda > 0)) throw Error(ErrorCode::DomainError, "lambda must be positive");
  for (Index j = 0; j < p; ++j) {
    if (rho_(j, j) != 1.0) throw Error(ErrorCode::DomainError, "rho must have unit diagonal");
    for (Index l = j + 1; l < p; ++l) {
      if (rho_(j, l) != rho_(l, j)) throw Error(ErrorCode::DomainError, "rho must be symmetric");
      if (!(std::abs(rho_(j, l)) < 1.0)) throw Error(ErrorCode::DomainError, "|rho| must be < 1");
    }
  }
  refresh();
}

void BasisGraphState::refresh() {
  auto R = cholesky_upper(rho_);
  if (!R) throw Error(ErrorCode::NotPositiveDefinite, "partial correlation matrix is not positive definite");
  chol_ = std::move(*R);
}

Vector BasisGraphState::c_vector() const {
  const Index p = this->p();
  Vector c(pair_count(p));
  Index idx = 0;
  for (Index j = 0; j < p; ++j)
    for (Index l = j + 1; l < p; ++l) c(idx++) = rho_to_c(rho_(j, l));
  return c;
}

void BasisGraphState::set_s(Index j, double value) {
  if (!(value > 0)) throw Error(ErrorCode::DomainError, "s must be positive");
  s_(j) = value;
}

void BasisGraphState::set_lambda(double value) {
  if (!(value > 0)) throw Error(ErrorCode::DomainError, "lambda must be positive");
  lambda_ = value;
}

void BasisGraphState::set_rho(Index j, Index l, double value) {
  if (j == l) throw Error(ErrorCode::DomainError, "rho diagonal is fixed at 1");
  if (!(std::abs(value) < 1.0)) throw Error(ErrorCode::DomainError, "|rho| must be < 1");
  const double old = rho_(j, l);
  rho_(j, l) = rho_(l, j) = value;
  auto R = cholesky_upper(rho_);
  if (!R) {
    rho_(j, l) = rho_(l, j) = old;
    throw Error(ErrorCode::NotPositiveDefinite, "update leaves P outside the positive definite cone");
  }
  chol_ = std::move(*R);
}

void BasisGraphState::set_rho_with_factor(Index j, Index l, double value, const Matrix& factor) {
  rho_(j, l) = rho_(l, j) = value;
  chol_ = factor;
}

void BasisGraphState::set_rho_matrix(const Matrix& rho, const Matrix& factor) {
  rho_ = rho;
  chol_ = factor;
}

bool cholesky_upper_inplace(const Matrix& A, Matrix& R) {
  const Index p = A.rows();
  R.resize(p, p);
  R.setZero();
  for (Index j = 0; j < p; ++j) {
    double pivot = A(j, j);
    for (Index r = 0; r < j; ++r) pivot -= R(r, j) * R(r, j);
    if (!(pivot >= kPivotTolerance)) return false;
    const double diag = std::sqrt(pivot);
    R(j, j) = diag;
    for (Index l = j + 1; l < p; ++l) {
      double v = A(j, l);
      for (Index r = 0; r < j; ++r) v -= R(r, j) * R(r, l);
      R(j, l) = v / diag;
    }
  }
  return true;
}

Matrix precision(const BasisGraphState& state) {
  Matrix omega = precision(state.s(), state.rho());
  // D_s P D_s with s > 0 is PD exactly when P is; P has unit scale
  if (!is_positive_definite(state.rho())) throw Error(ErrorCode::NotPositiveDefinite, "precision is not positive definite");
  return omega;
}

double conditional_cov_pair(const BasisGraphState& state, Index j, Index l) {
  if (j == l) throw Error(ErrorCode::DomainError, "conditional_cov_pair needs j != l");
  // (s_j s_l)^{-1} c_jl, identical to the 2x2 sub-inverse of Omega
  return state.c(j, l) / (state.s()(j) * state.s()(l));
}

double log_likelihood_gram(const BasisGraphState& state, const Matrix& gram, Index n) {
  const Matrix& R = state.chol();
  // log|Omega| = 2 sum log s + log|P|, log|P| = 2 sum log R_ii
  const double logdet = 2.0 * state.s().array().log().sum() + 2.0 * R.diagonal().array().log().sum();
  const double trace = (precision(state.s(), state.rho()).array() * gram.array()).sum();
  return 0.5 * static_cast<double>(n) * logdet - 0.5 * trace;
}

double log_likelihood_k(const BasisGraphState& state, const Matrix& slab) {
  if (slab.cols() != state.p()) throw Error(ErrorCode::DimensionMismatch, "slab must be n x p");
  return log_likelihood_gram(state, slab.transpose() * slab, slab.rows());
}

}  // namespace fungraph
