#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace hiermix {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Relative jitter added (once) to the diagonal when a Cholesky factorization
/// fails: `jitter = kJitterScale * trace(A) * I`.
inline constexpr double kJitterScale = 1e-10;

/// A symmetric positive-definite matrix bundled with its lower-triangular
/// Cholesky factor and log-determinant.  All solves and inverses go through
/// the cached factor, so downstream code never calls a generic `.inverse()`.
///
/// Construction symmetrizes the input, attempts a Cholesky factorization,
/// retries once with a small diagonal jitter (counted globally so runs can
/// report how often it happened), and throws NumericalError if the jittered
/// matrix still fails.
class SpdMatrix {
 public:
  SpdMatrix() = default;

  /// Builds from a (nearly) symmetric matrix.  Throws NumericalError if the
  /// matrix is not positive definite even after one jitter attempt.
  static SpdMatrix from_matrix(const Matrix& a);

  /// Builds from a lower-triangular Cholesky factor L, so that the matrix is
  /// L * L^T.  No factorization cost and no jitter.
  static SpdMatrix from_cholesky(const Matrix& chol_lower);

  /// Identity matrix of the given dimension.
  static SpdMatrix identity(int dim);

  const Matrix& matrix() const { return matrix_; }
  const Matrix& chol() const { return chol_; }  // lower triangular
  double log_det() const { return log_det_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }

  /// Solves A x = b via the cached Cholesky factor.
  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;

  /// The full inverse, computed column-by-column via the Cholesky factor.
  Matrix inverse() const;

  /// The quadratic form v^T A^{-1} v, via one triangular solve.
  double quad_inv(const Vector& v) const;

  /// Number of times any from_matrix call needed the diagonal jitter since
  /// process start (or the last reset).  Exposed so run manifests can record
  /// numerical stress.
  static std::int64_t jitter_count();
  static void reset_jitter_count();

 private:
  Matrix matrix_;
  Matrix chol_;
  double log_det_ = 0.0;
};

/// log of the multivariate gamma function, log Gamma_d(a).
double log_mv_gamma(int dim, double a);

}  // namespace hiermix
