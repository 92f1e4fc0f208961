#include "hiermix/linalg.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hiermix/errors.hpp"

namespace hiermix {

namespace {

std::atomic<std::int64_t> g_jitter_count{0};

// Attempts a lower Cholesky factorization; returns false if the matrix is not
// numerically positive definite.
bool try_cholesky(const Matrix& a, Matrix* chol_lower) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    return false;
  }
  *chol_lower = llt.matrixL();
  // Eigen can report Success with non-finite factors for pathological input.
  if (!chol_lower->allFinite()) {
    return false;
  }
  for (int i = 0; i < chol_lower->rows(); ++i) {
    if ((*chol_lower)(i, i) <= 0.0) {
      return false;
    }
  }
  return true;
}

double log_det_from_cholesky(const Matrix& chol_lower) {
  double log_det = 0.0;
  for (int i = 0; i < chol_lower.rows(); ++i) {
    log_det += 2.0 * std::log(chol_lower(i, i));
  }
  return log_det;
}

}  // namespace

SpdMatrix SpdMatrix::from_matrix(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw NumericalError("SpdMatrix: input is not square");
  }
  SpdMatrix result;
  result.matrix_ = 0.5 * (a + a.transpose());
  if (!result.matrix_.allFinite()) {
    throw NumericalError("SpdMatrix: input has non-finite entries");
  }
  if (!try_cholesky(result.matrix_, &result.chol_)) {
    double jitter = kJitterScale * result.matrix_.trace();
    if (!(jitter > 0.0)) {
      jitter = kJitterScale;
    }
    result.matrix_ +=
        jitter * Matrix::Identity(result.matrix_.rows(), result.matrix_.cols());
    g_jitter_count.fetch_add(1, std::memory_order_relaxed);
    if (!try_cholesky(result.matrix_, &result.chol_)) {
      std::ostringstream msg;
      msg << "SpdMatrix: matrix of dimension " << result.matrix_.rows()
          << " is not positive definite (even after diagonal jitter)";
      throw NumericalError(msg.str());
    }
  }
  result.log_det_ = log_det_from_cholesky(result.chol_);
  return result;
}

SpdMatrix SpdMatrix::from_cholesky(const Matrix& chol_lower) {
  SpdMatrix result;
  result.chol_ = chol_lower;
  result.matrix_ = chol_lower * chol_lower.transpose();
  result.log_det_ = log_det_from_cholesky(chol_lower);
  return result;
}

SpdMatrix SpdMatrix::identity(int dim) {
  SpdMatrix result;
  result.matrix_ = Matrix::Identity(dim, dim);
  result.chol_ = Matrix::Identity(dim, dim);
  result.log_det_ = 0.0;
  return result;
}

Vector SpdMatrix::solve(const Vector& b) const {
  Vector y = chol_.triangularView<Eigen::Lower>().solve(b);
  return chol_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix SpdMatrix::solve(const Matrix& b) const {
  Matrix y = chol_.triangularView<Eigen::Lower>().solve(b);
  return chol_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix SpdMatrix::inverse() const {
  const Matrix eye = Matrix::Identity(chol_.rows(), chol_.cols());
  return solve(eye);
}

double SpdMatrix::quad_inv(const Vector& v) const {
  Vector y = chol_.triangularView<Eigen::Lower>().solve(v);
  return y.squaredNorm();
}

std::int64_t SpdMatrix::jitter_count() {
  return g_jitter_count.load(std::memory_order_relaxed);
}

void SpdMatrix::reset_jitter_count() {
  g_jitter_count.store(0, std::memory_order_relaxed);
}

double log_mv_gamma(int dim, double a) {
  double result = 0.25 * dim * (dim - 1) * std::log(std::numbers::pi);
  for (int i = 0; i < dim; ++i) {
    result += std::lgamma(a - 0.5 * i);
  }
  return result;
}

}  // namespace hiermix
