#pragma once

#include <string>
#include <vector>

#include "hiermix/geweke.hpp"
#include "hiermix/mcmc.hpp"
#include "hiermix/merge.hpp"
#include "hiermix/pca.hpp"
#include "hiermix/summary.hpp"
#include "hiermix/synthetic.hpp"

namespace hiermix {

/// FNV-1a 64-bit hash of a byte string, hex encoded; fingerprints configs
/// inside run manifests.
std::string fnv1a_hex(const std::string& bytes);

/// Serializes a trace into `dir`: one long-format CSV per parameter family
/// (iteration plus the family's indices, then the value) and meta.json with
/// the shapes, counters, and diagnostics.  The production accumulators
/// (assignment frequencies, activation counts, weight sums) are part of the
/// trace and are written too.  Every value survives the round trip bit for
/// bit.
void save_trace(const Trace& trace, const std::string& dir);

/// Inverse of save_trace.  Throws DataError on missing files, indices out
/// of range, or row counts that disagree with meta.json.
Trace load_trace(const std::string& dir);

/// merge.json (partition, surviving population ids, merge log) plus
/// soft_weights.csv with one row per cell over {outlier} + populations.
void save_merge(const MergeResult& merge, const std::string& dir);

/// Point estimates and credible intervals as CSV tables under `dir`:
/// theta.csv and latent_cov.csv carry mean/median/lower/upper per entry,
/// psi_mean.csv, nu_mean.csv, mu_mean.csv, sigma_mean.csv, pi_mean.csv, and
/// activation.csv carry the remaining point estimates.
void save_summary(const PosteriorSummary& summary, const std::string& dir);

/// Estimate-versus-truth table with one row per latent parameter entry.
void save_recovery(const std::vector<RecoveryRow>& rows,
                   const std::string& path);

/// Generator parameters behind a synthetic dataset, as truth_*.csv files
/// under `dir` (latent layer, per-sample parameters, weights, activation,
/// and cell assignments).
void save_ground_truth(const GroundTruth& truth, const std::string& dir);

/// Inverse of save_ground_truth.
GroundTruth load_ground_truth(const std::string& dir);

/// Population-size matrix with a leading sample-id column and one
/// population column per entry of `population_ids`.
void save_population_sizes(const Matrix& sizes,
                           const std::vector<std::string>& sample_ids,
                           const std::vector<int>& population_ids,
                           const std::string& path);

/// Reads a numeric matrix with a leading id column, returning the ids and
/// the remaining column names alongside the values.
Matrix load_labeled_matrix(const std::string& path,
                           std::vector<std::string>* row_ids,
                           std::vector<std::string>* column_names);

/// Weighted per-population quantile tables as one CSV: population id,
/// marker, level, value.
void save_population_quantiles(const std::vector<Matrix>& tables,
                               const std::vector<int>& population_ids,
                               const std::vector<std::string>& marker_names,
                               const std::vector<double>& levels,
                               const std::string& path);

/// scores.csv (row id + one column per component), loadings.csv (marker
/// arrow coordinates), components.csv (unit directions), and variance.csv
/// (singular value and explained ratio per component).
void save_pca(const PcaResult& pca, const std::vector<std::string>& row_ids,
              const std::vector<std::string>& column_names,
              const std::string& dir);

/// Joint-distribution check report as JSON: per-functional means, standard
/// errors, and z scores, plus the overall verdict.
void save_geweke(const GewekeReport& report, const std::string& path);

}  // namespace hiermix
