#include "hiermix/synthetic.hpp"

#include <cmath>
#include <string>

#include "hiermix/distributions.hpp"
#include "hiermix/errors.hpp"

namespace hiermix {

namespace {

Matrix correlated_cov(double s0, double s1, double s2, int i, int j,
                      double rho) {
  Matrix cov = Matrix::Zero(3, 3);
  cov(0, 0) = s0 * s0;
  cov(1, 1) = s1 * s1;
  cov(2, 2) = s2 * s2;
  if (rho != 0.0) {
    const double off = rho * std::sqrt(cov(i, i) * cov(j, j));
    cov(i, j) = cov(j, i) = off;
  }
  return cov;
}

// Shared latent-cluster layout for both presets: four clusters in the unit
// cube with within-sample spreads well below the cluster separations, so
// pooled histograms are visibly multi-modal.
void fill_clusters(GeneratorSpec* spec) {
  spec->d = 3;
  spec->K = 4;
  spec->theta = {
      (Vector(3) << 0.25, 0.30, 0.70).finished(),
      (Vector(3) << 0.70, 0.25, 0.30).finished(),
      (Vector(3) << 0.40, 0.75, 0.55).finished(),
      (Vector(3) << 0.80, 0.80, 0.85).finished(),
  };
  spec->sigma_theta.assign(4, 4e-4 * Matrix::Identity(3, 3));
  spec->nu.assign(4, 50);
  const std::vector<Matrix> within = {
      correlated_cov(0.06, 0.05, 0.07, 0, 1, 0.3),
      correlated_cov(0.05, 0.06, 0.05, 0, 1, -0.2),
      correlated_cov(0.07, 0.07, 0.06, 1, 2, 0.25),
      correlated_cov(0.04, 0.04, 0.04, 0, 1, 0.0),
  };
  spec->psi.clear();
  for (int k = 0; k < 4; ++k)
    spec->psi.push_back((spec->nu[k] - 4) * within[k]);
  spec->outlier_mean = Vector::Constant(3, 0.5);
  spec->outlier_cov = 0.09 * Matrix::Identity(3, 3);
}

}  // namespace

void GeneratorSpec::validate() const {
  if (J <= 0 || d <= 0 || K <= 0)
    throw ConfigError("generator: J, d, K must be positive");
  if (static_cast<int>(n_cells.size()) != J)
    throw ConfigError("generator: n_cells must have one entry per sample");
  for (int n : n_cells)
    if (n <= 0) throw ConfigError("generator: cell counts must be positive");
  if (static_cast<int>(theta.size()) != K ||
      static_cast<int>(sigma_theta.size()) != K ||
      static_cast<int>(psi.size()) != K || static_cast<int>(nu.size()) != K)
    throw ConfigError("generator: latent parameter arrays must have size K");
  for (int k = 0; k < K; ++k) {
    if (theta[k].size() != d || sigma_theta[k].rows() != d ||
        sigma_theta[k].cols() != d || psi[k].rows() != d ||
        psi[k].cols() != d)
      throw ConfigError("generator: latent parameter dimensions must be d");
    if (nu[k] < d + 2)
      throw ConfigError("generator: nu must be at least d + 2");
  }
  if (static_cast<int>(activation.size()) != J)
    throw ConfigError("generator: activation must have one row per sample");
  for (const auto& row : activation) {
    if (static_cast<int>(row.size()) != K)
      throw ConfigError("generator: activation rows must have size K");
    bool any = false;
    for (std::uint8_t zk : row) any = any || zk != 0;
    if (!any)
      throw ConfigError("generator: every sample needs an active cluster");
  }
  if (base_weights.size() != K + 1)
    throw ConfigError("generator: base_weights must have size K + 1");
  if (base_weights.minCoeff() < 0.0 ||
      std::abs(base_weights.sum() - 1.0) > 1e-12)
    throw ConfigError("generator: base_weights must be a probability vector");
  for (int k = 1; k <= K; ++k)
    if (base_weights(k) <= 0.0)
      throw ConfigError("generator: cluster weights must be positive");
  if (weight_concentration < 0.0)
    throw ConfigError("generator: weight_concentration must be nonnegative");
  if (outlier_mean.size() != d || outlier_cov.rows() != d ||
      outlier_cov.cols() != d)
    throw ConfigError("generator: outlier parameters must have dimension d");
}

GeneratorSpec GeneratorSpec::sec31(double scale) {
  if (scale <= 0.0) throw ConfigError("generator: scale must be positive");
  GeneratorSpec spec;
  fill_clusters(&spec);
  spec.J = 80;
  const int n = static_cast<int>(std::lround(15000 * scale));
  if (n <= 0) throw ConfigError("generator: scale leaves no cells");
  spec.n_cells.assign(80, n);
  // Cluster 3 shows up in 24 samples and cluster 4 in 8, spread evenly.
  spec.activation.assign(80, {1, 1, 0, 0});
  for (int j = 0; j < 80; ++j) {
    if (j % 10 < 3) spec.activation[j][2] = 1;
    if (j % 10 == 0) spec.activation[j][3] = 1;
  }
  spec.base_weights =
      (Vector(5) << 0.005, 0.52, 0.30, 0.165, 0.01).finished();
  spec.weight_concentration = 2000.0;
  spec.seed = 31;
  return spec;
}

GeneratorSpec GeneratorSpec::desk() {
  GeneratorSpec spec;
  fill_clusters(&spec);
  spec.J = 20;
  spec.n_cells.assign(20, 2000);
  spec.activation.assign(20, {1, 1, 1, 0});
  spec.activation[0][3] = 1;
  spec.activation[10][3] = 1;
  spec.base_weights =
      (Vector(5) << 0.005, 0.50, 0.32, 0.165, 0.01).finished();
  spec.weight_concentration = 0.0;
  spec.seed = 20;
  return spec;
}

Matrix GroundTruth::latent_cov(int k) const {
  const int d = static_cast<int>(theta[k - 1].size());
  return psi[k - 1] / (nu[k - 1] - d - 1);
}

std::pair<Dataset, GroundTruth> generate_synthetic(const GeneratorSpec& spec,
                                                   RngStream& rng) {
  spec.validate();
  const int J = spec.J, d = spec.d, K = spec.K;

  GroundTruth truth;
  truth.theta = spec.theta;
  truth.sigma_theta = spec.sigma_theta;
  truth.psi = spec.psi;
  truth.nu = spec.nu;
  truth.activation = spec.activation;
  truth.outlier_mean = spec.outlier_mean;
  truth.outlier_cov = spec.outlier_cov;

  std::vector<SpdMatrix> sigma_theta_spd, psi_spd;
  for (int k = 0; k < K; ++k) {
    sigma_theta_spd.push_back(SpdMatrix::from_matrix(spec.sigma_theta[k]));
    psi_spd.push_back(SpdMatrix::from_matrix(spec.psi[k]));
  }
  const SpdMatrix outlier_cov = SpdMatrix::from_matrix(spec.outlier_cov);

  Dataset data;
  for (int m = 0; m < d; ++m)
    data.marker_names.push_back("m" + std::to_string(m));

  truth.mu.resize(J);
  truth.sigma.resize(J);
  truth.pi.resize(J);
  truth.assignments.resize(J);
  for (int j = 0; j < J; ++j) {
    std::vector<Matrix> sigma_chol;  // lower factors, component k at k-1
    for (int k = 0; k < K; ++k) {
      truth.mu[j].push_back(
          draw_mvn(spec.theta[k], sigma_theta_spd[k], rng));
      const SpdMatrix sigma =
          draw_inverse_wishart(psi_spd[k], spec.nu[k], rng);
      truth.sigma[j].push_back(sigma.matrix());
      sigma_chol.push_back(sigma.chol());
    }

    Vector pi = Vector::Zero(K + 1);
    pi(0) = spec.base_weights(0);
    for (int k = 1; k <= K; ++k)
      if (spec.activation[j][k - 1]) pi(k) = spec.base_weights(k);
    pi /= pi.sum();
    if (spec.weight_concentration > 0.0) {
      Vector alpha = spec.weight_concentration * pi;
      // Keep inactive coordinates at exactly zero through the Dirichlet.
      Vector active_alpha(0);
      std::vector<int> slots;
      for (int k = 0; k <= K; ++k) {
        if (pi(k) > 0.0) slots.push_back(k);
      }
      active_alpha.resize(static_cast<Eigen::Index>(slots.size()));
      for (std::size_t s = 0; s < slots.size(); ++s)
        active_alpha(static_cast<Eigen::Index>(s)) = alpha(slots[s]);
      const Vector drawn = draw_dirichlet(active_alpha, rng);
      pi.setZero();
      for (std::size_t s = 0; s < slots.size(); ++s)
        pi(slots[s]) = drawn(static_cast<Eigen::Index>(s));
    }
    truth.pi[j] = pi;

    int last_active = 0;
    for (int k = K; k > 0; --k) {
      if (pi(k) > 0.0) {
        last_active = k;
        break;
      }
    }
    const int n = spec.n_cells[j];
    Matrix cells(n, d);
    truth.assignments[j].resize(n);
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform();
      double acc = 0.0;
      int x = last_active;  // guard against cumulative rounding at the top
      for (int k = 0; k <= K; ++k) {
        acc += pi(k);
        if (u < acc) {
          x = k;
          break;
        }
      }
      truth.assignments[j][i] = x;
      const Vector cell =
          x == 0 ? draw_mvn(spec.outlier_mean, outlier_cov, rng)
                 : draw_mvn_chol(truth.mu[j][x - 1], sigma_chol[x - 1], rng);
      cells.row(i) = cell.transpose();
    }
    data.samples.push_back(std::move(cells));
    data.sample_ids.push_back("sim" + std::to_string(j));
  }
  return {std::move(data), std::move(truth)};
}

std::pair<Dataset, GroundTruth> generate_synthetic(const GeneratorSpec& spec) {
  RngStream rng(spec.seed, 0);
  return generate_synthetic(spec, rng);
}

}  // namespace hiermix
