#pragma once

#include "fungraph/common.hpp"

#include <cmath>
#include <optional>

namespace fungraph {

struct Hyperparameters {
  double alpha_s = 0.1;
  double beta_s = 0.1;
  double alpha_lambda = 0.1;
  double beta_lambda = 0.1;

  void validate() const {
    if (!(alpha_s > 0 && beta_s > 0 && alpha_lambda > 0 && beta_lambda > 0))
      throw Error(ErrorCode::InvalidConfig, "hyperparameters must be strictly positive");
  }
};

// Pivot threshold of the positive-definiteness certificate.
inline constexpr double kPivotTolerance = 1e-12;

// c = -rho / (1 - rho^2)
template <typename Scalar>
Scalar rho_to_c(Scalar rho) {
  using std::abs;
  if (!(abs(rho) < Scalar(1))) throw Error(ErrorCode::DomainError, "|rho| must be < 1");
  return -rho / (Scalar(1) - rho * rho);
}

// Inverse of rho_to_c on (-1, 1); rho(0) = 0 is the removable singularity.
template <typename Scalar>
Scalar c_to_rho(Scalar c) {
  using std::sqrt;
  if (c == Scalar(0)) return Scalar(0);
  // (1 - sqrt(1 + 4c^2)) / (2c), rewritten to avoid cancellation for small |c|
  return Scalar(-2) * c / (Scalar(1) + sqrt(Scalar(1) + Scalar(4) * c * c));
}

// Upper-triangular R with R'R = A. Fails (nullopt) as soon as a pivot, the
// squared diagonal entry before the square root, falls below kPivotTolerance.
template <typename Derived>
std::optional<Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>> cholesky_upper(
    const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  using std::sqrt;
  const Index p = A.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> R =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(p, p);
  for (Index j = 0; j < p; ++j) {
    Scalar pivot = A(j, j) - R.col(j).head(j).squaredNorm();
    if (!(pivot >= Scalar(kPivotTolerance))) return std::nullopt;
    R(j, j) = sqrt(pivot);
    for (Index l = j + 1; l < p; ++l) {
      R(j, l) = (A(j, l) - R.col(j).head(j).dot(R.col(l).head(j))) / R(j, j);
    }
  }
  return R;
}

// Allocation-free variant writing into R (resized only if needed).
bool cholesky_upper_inplace(const Matrix& A, Matrix& R);

template <typename Derived>
bool is_positive_definite(const Eigen::MatrixBase<Derived>& A) {
  return cholesky_upper(A).has_value();
}

// Model state for one basis index k: Omega = D_s P D_s.
class BasisGraphState {
 public:
  BasisGraphState() = default;
  // s = 1, rho = 0, lambda as given.
  BasisGraphState(Index p, double lambda);
  BasisGraphState(Vector s, Matrix rho, double lambda);

  Index p() const { return s_.size(); }
  const Vector& s() const { return s_; }
  const Matrix& rho() const { return rho_; }
  double lambda() const { return lambda_; }
  const Matrix& chol() const { return chol_; }
  double c(Index j, Index l) const { return rho_to_c(rho_(j, l)); }

  // Off-diagonal c values in lexicographic (j < l) order.
  Vector c_vector() const;

  void set_s(Index j, double value);
  void set_lambda(double value);
  // Accepts rho only if P stays positive definite; refreshes the Cholesky
  // factor. Throws NotPositiveDefinite otherwise.
  void set_rho(Index j, Index l, double value);
  // Sets rho and the cached factor without recomputation; R must satisfy R'R = P.
  void set_rho_with_factor(Index j, Index l, double value, const Matrix& factor);
  // Replaces the whole partial correlation matrix; R must satisfy R'R = rho.
  void set_rho_matrix(const Matrix& rho, const Matrix& factor);

 private:
  void refresh();

  Vector s_;
  Matrix rho_;
  double lambda_ = 1.0;
  Matrix chol_;
};

// D_s P D_s
inline Matrix precision(const Vector& s, const Matrix& rho) {
  return s.asDiagonal() * rho * s.asDiagonal();
}
Matrix precision(const BasisGraphState& state);

// Cov(Y_j, Y_l | rest) = -w_jl / (w_jj w_ll - w_jl^2), j != l.
template <typename Derived>
typename Derived::Scalar conditional_cov_pair(const Eigen::MatrixBase<Derived>& omega, Index j, Index l) {
  const auto w_jl = omega(j, l);
  return -w_jl / (omega(j, j) * omega(l, l) - w_jl * w_jl);
}
double conditional_cov_pair(const BasisGraphState& state, Index j, Index l);

// sum_i log N(y_i | 0, Omega^{-1}) without the (2 pi)^{-np/2} constant:
// (n/2) log|Omega| - (1/2) tr(Omega Y'Y), with Y the n x p slab.
double log_likelihood_k(const BasisGraphState& state, const Matrix& slab);
double log_likelihood_gram(const BasisGraphState& state, const Matrix& gram, Index n);

}  // namespace fungraph
