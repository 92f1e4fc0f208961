#include "hiermix/distributions.hpp"

#include <cmath>
#include <limits>

#include "hiermix/errors.hpp"

namespace hiermix {

namespace {

Vector standard_normal_vector(int dim, RngStream& rng) {
  Vector z(dim);
  for (int i = 0; i < dim; ++i) {
    z(i) = rng.normal();
  }
  return z;
}

// Bartlett factor: lower triangular A with A_ii = sqrt(chi^2(dof - i)) (0-based
// rows) and A_ij ~ N(0,1) below the diagonal.  Then Wishart(I, dof) = A A^T.
Matrix bartlett_factor(int dim, double dof, RngStream& rng) {
  Matrix a = Matrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(dof - i));
    for (int j = 0; j < i; ++j) {
      a(i, j) = rng.normal();
    }
  }
  return a;
}

}  // namespace

Vector draw_mvn(const Vector& mean, const SpdMatrix& cov, RngStream& rng) {
  return draw_mvn_chol(mean, cov.chol(), rng);
}

Vector draw_mvn_chol(const Vector& mean, const Matrix& cov_chol_lower,
                     RngStream& rng) {
  const int dim = static_cast<int>(mean.size());
  Vector z = standard_normal_vector(dim, rng);
  return mean + cov_chol_lower.triangularView<Eigen::Lower>() * z;
}

Vector draw_mvn_from_precision(const Vector& mean, const SpdMatrix& precision,
                               RngStream& rng) {
  const int dim = static_cast<int>(mean.size());
  Vector z = standard_normal_vector(dim, rng);
  // If Lambda = L L^T then x = mean + L^{-T} z has covariance Lambda^{-1}.
  Vector shift =
      precision.chol().transpose().triangularView<Eigen::Upper>().solve(z);
  return mean + shift;
}

SpdMatrix draw_wishart(const SpdMatrix& scale, double dof, RngStream& rng) {
  const int dim = scale.dim();
  if (!(dof > dim - 1)) {
    throw NumericalError("draw_wishart: dof must exceed dim - 1");
  }
  const Matrix a = bartlett_factor(dim, dof, rng);
  // scale = L L^T, draw = L A A^T L^T = (L A)(L A)^T.
  const Matrix la = scale.chol().triangularView<Eigen::Lower>() * a;
  return SpdMatrix::from_cholesky(la);
}

SpdMatrix draw_inverse_wishart(const SpdMatrix& scale, double dof,
                               RngStream& rng) {
  const int dim = scale.dim();
  if (!(dof > dim - 1)) {
    throw NumericalError("draw_inverse_wishart: dof must exceed dim - 1");
  }
  // If scale = L L^T and A is a Bartlett factor for dof, then
  //   W = L^{-T} A A^T L^{-1} ~ Wishart(scale^{-1}, dof)
  // and the inverse-Wishart draw is W^{-1} = (L A^{-T}) (L A^{-T})^T... more
  // directly: W^{-1} = M^T M with M = A^{-1} L^T, all by triangular solves.
  const Matrix a = bartlett_factor(dim, dof, rng);
  const Matrix m = a.triangularView<Eigen::Lower>().solve(
      Matrix(scale.chol().transpose()));
  return SpdMatrix::from_matrix(m.transpose() * m);
}

Vector draw_dirichlet(const Vector& alpha, RngStream& rng) {
  const int dim = static_cast<int>(alpha.size());
  Vector draw(dim);
  double total = 0.0;
  for (int i = 0; i < dim; ++i) {
    if (!(alpha(i) > 0.0)) {
      throw NumericalError("draw_dirichlet: concentrations must be positive");
    }
    draw(i) = rng.gamma(alpha(i));
    total += draw(i);
  }
  if (total <= 0.0) {
    // All gammas underflowed to zero (tiny concentrations); fall back to the
    // largest coordinate getting all the mass via log-domain comparison.
    draw.setZero();
    int argmax = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < dim; ++i) {
      const double log_g = std::log(rng.gamma(alpha(i) + 1.0)) +
                           std::log(rng.uniform()) / alpha(i);
      if (log_g > best) {
        best = log_g;
        argmax = i;
      }
    }
    draw(argmax) = 1.0;
    return draw;
  }
  return draw / total;
}

int draw_categorical(const std::vector<double>& log_weights, RngStream& rng) {
  if (log_weights.empty()) {
    throw NumericalError("draw_categorical: no categories");
  }
  int argmax = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(log_weights.size()); ++i) {
    const double gumbel = -std::log(-std::log(rng.uniform()));
    const double score = log_weights[i] + gumbel;
    if (score > best) {
      best = score;
      argmax = i;
    }
  }
  if (!std::isfinite(best)) {
    throw NumericalError("draw_categorical: no finite log weight");
  }
  return argmax;
}

}  // namespace hiermix
