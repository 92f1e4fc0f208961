#pragma once

#include <vector>

#include "hiermix/linalg.hpp"
#include "hiermix/rng.hpp"

namespace hiermix {

/// Draw from N(mean, cov).
Vector draw_mvn(const Vector& mean, const SpdMatrix& cov, RngStream& rng);

/// Draw from N(mean, L L^T) given the lower Cholesky factor L of the
/// covariance: mean + L z.
Vector draw_mvn_chol(const Vector& mean, const Matrix& cov_chol_lower,
                     RngStream& rng);

/// Draw from N(mean, Lambda^{-1}) given the precision matrix Lambda, without
/// ever forming the covariance: mean + L^{-T} z where Lambda = L L^T.
Vector draw_mvn_from_precision(const Vector& mean, const SpdMatrix& precision,
                               RngStream& rng);

/// Draw from Wishart(scale, dof) via the Bartlett decomposition.
/// Requires dof > dim - 1.
SpdMatrix draw_wishart(const SpdMatrix& scale, double dof, RngStream& rng);

/// Draw from InverseWishart(scale, dof): if W ~ Wishart(scale^{-1}, dof) then
/// W^{-1} is the draw, computed by triangular solves so the result is SPD by
/// construction.  Requires dof > dim - 1.
SpdMatrix draw_inverse_wishart(const SpdMatrix& scale, double dof,
                               RngStream& rng);

/// Draw from Dirichlet(alpha) via normalized gammas.
Vector draw_dirichlet(const Vector& alpha, RngStream& rng);

/// Draw an index from the categorical distribution with the given unnormalized
/// log weights, via the Gumbel-max trick (invariant to shifting all weights by
/// a constant).
int draw_categorical(const std::vector<double>& log_weights, RngStream& rng);

}  // namespace hiermix
