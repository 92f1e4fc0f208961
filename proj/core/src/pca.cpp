#include "hiermix/pca.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "hiermix/errors.hpp"

namespace hiermix {

Matrix PcaResult::reconstruct() const {
  return (scores * components.transpose()).rowwise() +
         column_means.transpose();
}

PcaResult pca_biplot(const Matrix& x) {
  const Eigen::Index rows = x.rows(), cols = x.cols();
  if (rows < 2 || cols < 2)
    throw DataError("pca: need at least two rows and two columns");

  PcaResult result;
  result.column_means = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - result.column_means.transpose();

  Eigen::JacobiSVD<Matrix> svd(centered,
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  result.singular_values = svd.singularValues();
  const double total = result.singular_values.squaredNorm();
  if (total <= 0.0)
    throw DataError("pca: input is constant (rank zero after centering)");

  result.scores = svd.matrixU() * result.singular_values.asDiagonal();
  result.components = svd.matrixV();
  result.loadings = result.components *
                    (result.singular_values /
                     std::sqrt(static_cast<double>(rows - 1)))
                        .asDiagonal();
  result.explained_variance_ratio =
      result.singular_values.array().square() / total;
  return result;
}

}  // namespace hiermix
