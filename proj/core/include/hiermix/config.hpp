#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hiermix/linalg.hpp"
#include "hiermix/mcmc.hpp"
#include "hiermix/merge.hpp"
#include "hiermix/model.hpp"

namespace hiermix {

/// Recipe for building the PriorSpec once the data (and hence the marker
/// names) are known.  Either a neutral unit-scale prior with K components,
/// or the 17-component immunophenotyping preset whose informative centers
/// are keyed to the CD4/CD8/CD3/CD19 marker names.
struct PriorConfig {
  std::string preset = "unit_scale";  // "unit_scale" or "immuno_k17"
  int K = 0;                          // required for unit_scale
  std::vector<Vector> anchors;        // optional informative centers, size K
  double anchor_spread = 0.5;
  std::optional<double> c_s;
  std::optional<std::vector<double>> lambda;  // size K when given
  std::optional<int> nu_min;
  std::optional<double> outlier_weight;  // Dirichlet weight of the outlier
  std::optional<double> n_theta;
  std::optional<double> n_psi;
  bool outlier_from_data = true;
};

/// One fit run: where the cells come from, how to scale them, the prior
/// recipe, the sampler settings, the merge settings, and where results go.
struct RunConfig {
  std::vector<std::string> samples;
  std::string output_dir = ".";
  bool scale = true;
  PriorConfig prior;
  McmcConfig mcmc;
  MergeConfig merge;
};

/// Parses a JSON run configuration from a string.  Unknown keys anywhere
/// are fail-fast ConfigErrors naming the key and the object it appeared in;
/// types and ranges are checked on read.  `source` labels error messages.
RunConfig parse_run_config(const std::string& text, const std::string& source);

/// Reads and parses a run configuration file, then checks that every
/// referenced sample file exists.
RunConfig load_run_config(const std::string& path);

/// Builds the concrete PriorSpec for a dataset: resolves the preset against
/// the marker names, applies the overrides, and (by default) centers the
/// outlier component on the pooled data.
PriorSpec resolve_prior(const PriorConfig& config, const Dataset& data);

}  // namespace hiermix
