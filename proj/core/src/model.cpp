#include "hiermix/model.hpp"

#include <cmath>
#include <sstream>

#include "hiermix/errors.hpp"

namespace hiermix {

std::int64_t Dataset::total_cells() const {
  std::int64_t total = 0;
  for (const auto& sample : samples) {
    total += sample.rows();
  }
  return total;
}

Vector Dataset::pooled_mean() const {
  Vector sum = Vector::Zero(dim());
  for (const auto& sample : samples) {
    sum += sample.colwise().sum().transpose();
  }
  return sum / static_cast<double>(total_cells());
}

Matrix Dataset::pooled_cov() const {
  const Vector mean = pooled_mean();
  Matrix scatter = Matrix::Zero(dim(), dim());
  for (const auto& sample : samples) {
    Matrix centered = sample.rowwise() - mean.transpose();
    scatter += centered.transpose() * centered;
  }
  const double denom = static_cast<double>(total_cells()) - 1.0;
  return scatter / (denom > 0.0 ? denom : 1.0);
}

void Dataset::validate() const {
  if (samples.empty()) {
    throw DataError("Dataset: no samples");
  }
  if (static_cast<int>(sample_ids.size()) != n_samples()) {
    throw DataError("Dataset: sample_ids size does not match sample count");
  }
  const int d = dim();
  if (d < 1) {
    throw DataError("Dataset: dimension must be >= 1");
  }
  if (static_cast<int>(marker_names.size()) != d) {
    throw DataError("Dataset: marker_names size does not match column count");
  }
  for (int j = 0; j < n_samples(); ++j) {
    const Matrix& sample = samples[j];
    if (sample.cols() != d) {
      std::ostringstream msg;
      msg << "Dataset: sample " << sample_ids[j] << " has " << sample.cols()
          << " columns, expected " << d;
      throw DataError(msg.str());
    }
    if (sample.rows() < 1) {
      throw DataError("Dataset: sample " + sample_ids[j] + " has no rows");
    }
    if (!sample.allFinite()) {
      throw DataError("Dataset: sample " + sample_ids[j] +
                      " contains non-finite values");
    }
  }
}

void PriorSpec::validate() const {
  if (K < 1) {
    throw ConfigError("PriorSpec: K must be >= 1");
  }
  if (d < 1) {
    throw ConfigError("PriorSpec: d must be >= 1");
  }
  auto check_size = [&](std::size_t have, const char* name) {
    if (have != static_cast<std::size_t>(K)) {
      std::ostringstream msg;
      msg << "PriorSpec: " << name << " has " << have << " entries, expected K="
          << K;
      throw ConfigError(msg.str());
    }
  };
  check_size(t.size(), "t");
  check_size(S.size(), "S");
  check_size(Q.size(), "Q");
  check_size(H.size(), "H");
  check_size(lambda.size(), "lambda");
  if (!n_theta_override.empty()) check_size(n_theta_override.size(), "n_theta_override");
  if (!n_psi_override.empty()) check_size(n_psi_override.size(), "n_psi_override");
  for (int k = 0; k < K; ++k) {
    if (t[k].size() != d || S[k].dim() != d || Q[k].dim() != d ||
        H[k].dim() != d) {
      std::ostringstream msg;
      msg << "PriorSpec: hyperparameters for component " << (k + 1)
          << " are not " << d << "-dimensional";
      throw ConfigError(msg.str());
    }
    if (!(lambda[k] > 0.0)) {
      throw ConfigError("PriorSpec: lambda entries must be positive");
    }
    if (!(n_theta_for(k) > d + 1)) {
      throw ConfigError("PriorSpec: n_theta must exceed d + 1");
    }
    if (!(n_psi_for(k) > d - 1)) {
      throw ConfigError("PriorSpec: n_psi must exceed d - 1");
    }
  }
  if (a.size() != K + 1) {
    throw ConfigError("PriorSpec: a must have K + 1 entries (index 0 = outlier)");
  }
  for (int k = 0; k <= K; ++k) {
    if (!(a(k) > 0.0)) {
      throw ConfigError("PriorSpec: Dirichlet weights must be positive");
    }
  }
  if (!(c_s > 0.0)) {
    throw ConfigError("PriorSpec: c_s must be positive");
  }
  if (nu_min < d + 2) {
    throw ConfigError("PriorSpec: nu_min must be >= d + 2");
  }
  if (outlier_mean.size() != d || outlier_cov.dim() != d) {
    throw ConfigError("PriorSpec: outlier parameters are not d-dimensional");
  }
}

PriorSpec PriorSpec::unit_scale(int K, int d, const std::vector<Vector>& anchors,
                                double anchor_spread) {
  if (!anchors.empty() && static_cast<int>(anchors.size()) != K) {
    throw ConfigError("PriorSpec::unit_scale: anchors must be empty or size K");
  }
  PriorSpec prior;
  prior.K = K;
  prior.d = d;
  const Matrix eye = Matrix::Identity(d, d);
  for (int k = 0; k < K; ++k) {
    Vector anchor =
        anchors.empty() ? Vector::Constant(d, 0.5).eval() : anchors[k];
    prior.t.push_back(anchor);
    prior.S.push_back(SpdMatrix::from_matrix(anchor_spread * anchor_spread * eye));
    prior.Q.push_back(SpdMatrix::from_matrix(0.01 * eye));
    prior.H.push_back(SpdMatrix::from_matrix(0.01 * eye));
    prior.lambda.push_back(0.1);
  }
  prior.n_theta = d + 2;
  prior.n_psi = d + 2;
  prior.a = Vector::Ones(K + 1);
  prior.c_s = 1.0;
  prior.nu_min = d + 2;
  prior.outlier_mean = Vector::Constant(d, 0.5);
  prior.outlier_cov = SpdMatrix::from_matrix(4.0 * eye);
  return prior;
}

void PriorSpec::set_outlier_from_data(const Dataset& data) {
  outlier_mean = data.pooled_mean();
  outlier_cov = SpdMatrix::from_matrix(4.0 * data.pooled_cov());
}

int ChainState::active_count(int j) const {
  int count = 0;
  for (int k = 1; k <= K(); ++k) {
    if (active(j, k)) ++count;
  }
  return count;
}

void ChainState::validate(const PriorSpec& prior) const {
  const int k_count = K();
  const int j_count = J();
  const int d = dim();
  if (k_count != prior.K || d != prior.d) {
    throw NumericalError("ChainState: dimensions do not match prior");
  }
  if (static_cast<int>(sigma_theta.size()) != k_count ||
      static_cast<int>(psi.size()) != k_count ||
      static_cast<int>(nu.size()) != k_count) {
    throw NumericalError("ChainState: latent layer arrays have mixed sizes");
  }
  for (int k = 0; k < k_count; ++k) {
    if (nu[k] < prior.nu_min) {
      throw NumericalError("ChainState: nu below nu_min");
    }
  }
  if (static_cast<int>(mu.size()) != j_count ||
      static_cast<int>(sigma.size()) != j_count ||
      static_cast<int>(z.size()) != j_count ||
      static_cast<int>(x.size()) != j_count) {
    throw NumericalError("ChainState: per-sample arrays have mixed sizes");
  }
  for (int j = 0; j < j_count; ++j) {
    if (pi[j].size() != k_count + 1) {
      throw NumericalError("ChainState: pi has wrong length");
    }
    double total = 0.0;
    for (int k = 0; k <= k_count; ++k) {
      if (pi[j](k) < 0.0) {
        throw NumericalError("ChainState: negative mixture weight");
      }
      total += pi[j](k);
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw NumericalError("ChainState: mixture weights do not sum to 1");
    }
    int n_active = 0;
    for (int k = 1; k <= k_count; ++k) {
      if (active(j, k)) {
        ++n_active;
      } else if (pi[j](k) != 0.0) {
        throw NumericalError(
            "ChainState: inactive component has nonzero weight");
      }
    }
    if (n_active < 1) {
      throw NumericalError("ChainState: sample has no active components");
    }
    for (int assignment : x[j]) {
      if (assignment < 0 || assignment > k_count) {
        throw NumericalError("ChainState: assignment out of range");
      }
      if (assignment > 0 && !active(j, assignment)) {
        throw NumericalError(
            "ChainState: cell assigned to an inactive component");
      }
    }
  }
}

}  // namespace hiermix
