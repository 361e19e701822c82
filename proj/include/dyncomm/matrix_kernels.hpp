#pragma once

#include <dyncomm/core.hpp>
#include <dyncomm/io.hpp>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>

namespace dyncomm {

// M = a A + a^2 A^2 / 2 + ... + a^p A^p / p, the truncated series for
// -log(I - aA). Kept in factored form: right-multiplication by M and
// transpose-application cost p iterated sparse products, so M never has to be
// formed densely while A stays sparse.
struct NegLogSeriesOp {
  const SparseSnapshot& A;
  double a;
  int p;

  NegLogSeriesOp(const SparseSnapshot& A_, double a_, int p_) : A(A_), a(a_), p(p_) {
    if (p < 1) throw ValidationError("neg_log_series: order p must be >= 1");
    if (!(a > 0)) throw ValidationError("neg_log_series: attenuation a must be > 0");
  }

  // X * M as sum of X * A^k terms, fixed ascending-k summation order.
  Matrix apply_right(const Matrix& X) const {
    Matrix P = X * A;
    Matrix acc = (a / 1.0) * P;
    double coeff = a;
    for (int k = 2; k <= p; ++k) {
      P = P * A;
      coeff *= a;
      acc.noalias() += (coeff / k) * P;
    }
    return acc;
  }

  // M^T v = sum (a^k / k) (A^T)^k v.
  Vector apply_transpose(const Vector& v) const {
    Vector u = A.transpose() * v;
    Vector acc = a * u;
    double coeff = a;
    for (int k = 2; k <= p; ++k) {
      u = A.transpose() * u;
      coeff *= a;
      acc.noalias() += (coeff / k) * u;
    }
    return acc;
  }

  Matrix dense() const {
    return apply_right(Matrix::Identity(A.rows(), A.cols()));
  }
};

// Dense M ~= -log(I - aA), truncated after p terms.
inline Matrix neg_log_series(const SparseSnapshot& A, double a, int p) {
  return NegLogSeriesOp(A, a, p).dense();
}

// (I - aA)^{-1} by LU with partial pivoting. This is the exact-resolvent
// oracle; it never goes through the truncated series.
inline Matrix katz_resolvent(const SparseSnapshot& A, double a) {
  const Eigen::Index n = A.rows();
  Matrix B = Matrix::Identity(n, n) - a * Matrix(A);
  Eigen::PartialPivLU<Matrix> lu(B);
  if (!(lu.rcond() > 1e-14))
    throw ValidationError(
        "katz_resolvent: I - aA numerically singular; the spectral condition "
        "1 - a*lambda > 0 is violated");
  Matrix R = lu.solve(Matrix::Identity(n, n));
  // For nonnegative A inside the valid regime the resolvent is entrywise >= 0;
  // negative entries mean 1 - a*lambda > 0 failed for some real eigenvalue.
  if (R.minCoeff() < -1e-10 * std::max(1.0, R.cwiseAbs().maxCoeff()))
    throw ValidationError(
        "katz_resolvent: negative resolvent entries; the spectral condition "
        "1 - a*lambda > 0 is violated");
  return R;
}

// Dense matrix exponential via Eigen's scaling-and-squaring Pade
// implementation. Accurate enough (~1e-12 relative on well-conditioned input)
// to act as the reference oracle for the integrator.
inline Matrix matrix_exp(const Matrix& C) {
  if (!C.allFinite()) throw ValidationError("matrix_exp: non-finite entries in input");
  Matrix E = C.exp();
  if (!E.allFinite()) throw Error("matrix_exp: overflow in exponential");
  return E;
}

// (I - aA)^{-alpha} = exp(alpha * -log(I - aA)) with the truncated series log.
// alpha is restricted to [-1, 1], the stated range of log(H^alpha) = alpha log H.
inline Matrix fractional_resolvent_power(const SparseSnapshot& A, double a, double alpha, int p) {
  if (std::abs(alpha) > 1.0)
    throw ValidationError("fractional_resolvent_power: alpha must lie in [-1, 1], got " +
                          format_double(alpha));
  const Eigen::Index n = A.rows();
  if (alpha == 0.0) return Matrix::Identity(n, n);
  return matrix_exp(alpha * neg_log_series(A, a, p));
}

namespace detail {

inline double spectral_radius(const Matrix& Y) {
  Eigen::EigenSolver<Matrix> es(Y, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace detail

// log(I + Y) by the Mercator series, run until the term is negligible.
// Requires spectral radius of Y below 1.
inline Matrix log_one_plus_series(const Matrix& Y, double rel_tol = 1e-16, int max_terms = 256) {
  if (Y.rows() != Y.cols()) throw ValidationError("log_one_plus_series: square input required");
  if (detail::spectral_radius(Y) >= 1.0)
    throw ValidationError("log_one_plus_series: spectral radius of H - I is >= 1; series invalid");
  Matrix P = Y;
  Matrix L = Y;
  double sign = 1.0;
  for (int k = 2; k <= max_terms; ++k) {
    P = P * Y;
    sign = -sign;
    Matrix term = (sign / k) * P;
    L += term;
    if (term.norm() <= rel_tol * std::max(1e-300, L.norm())) break;
  }
  return L;
}

}  // namespace dyncomm
