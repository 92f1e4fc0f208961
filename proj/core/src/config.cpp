#include "hiermix/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hiermix/errors.hpp"

namespace hiermix {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
    }
  }
}

const json& require(const json& obj, const char* key,
                    const std::string& where) {
  if (!obj.contains(key)) {
    throw ConfigError(where + ": missing required key \"" + key + "\"");
  }
  return obj.at(key);
}

double as_number(const json& value, const std::string& where) {
  if (!value.is_number()) throw ConfigError(where + ": expected a number");
  return value.get<double>();
}

long long as_integer(const json& value, const std::string& where) {
  if (!value.is_number_integer()) {
    throw ConfigError(where + ": expected an integer");
  }
  return value.get<long long>();
}

bool as_bool(const json& value, const std::string& where) {
  if (!value.is_boolean()) throw ConfigError(where + ": expected a boolean");
  return value.get<bool>();
}

std::string as_string(const json& value, const std::string& where) {
  if (!value.is_string()) throw ConfigError(where + ": expected a string");
  return value.get<std::string>();
}

PriorConfig parse_prior(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  check_keys(obj, where,
             {"preset", "K", "anchors", "anchor_spread", "c_s", "lambda",
              "nu_min", "outlier_weight", "n_theta", "n_psi",
              "outlier_from_data"});
  PriorConfig prior;
  if (obj.contains("preset")) {
    prior.preset = as_string(obj.at("preset"), where + ".preset");
  }
  if (obj.contains("K")) {
    prior.K = static_cast<int>(as_integer(obj.at("K"), where + ".K"));
  }
  if (obj.contains("anchors")) {
    const json& anchors = obj.at("anchors");
    if (!anchors.is_array()) {
      throw ConfigError(where + ".anchors: expected an array of arrays");
    }
    for (std::size_t k = 0; k < anchors.size(); ++k) {
      const std::string entry =
          where + ".anchors[" + std::to_string(k) + "]";
      if (!anchors[k].is_array() || anchors[k].empty()) {
        throw ConfigError(entry + ": expected a non-empty array");
      }
      Vector anchor(anchors[k].size());
      for (std::size_t c = 0; c < anchors[k].size(); ++c) {
        anchor(c) = as_number(anchors[k][c], entry);
      }
      prior.anchors.push_back(std::move(anchor));
    }
  }
  if (obj.contains("anchor_spread")) {
    prior.anchor_spread =
        as_number(obj.at("anchor_spread"), where + ".anchor_spread");
  }
  if (obj.contains("c_s")) {
    prior.c_s = as_number(obj.at("c_s"), where + ".c_s");
  }
  if (obj.contains("lambda")) {
    const json& lambda = obj.at("lambda");
    if (!lambda.is_array()) {
      throw ConfigError(where + ".lambda: expected an array");
    }
    std::vector<double> rates;
    for (std::size_t k = 0; k < lambda.size(); ++k) {
      rates.push_back(as_number(lambda[k], where + ".lambda"));
    }
    prior.lambda = std::move(rates);
  }
  if (obj.contains("nu_min")) {
    prior.nu_min =
        static_cast<int>(as_integer(obj.at("nu_min"), where + ".nu_min"));
  }
  if (obj.contains("outlier_weight")) {
    prior.outlier_weight =
        as_number(obj.at("outlier_weight"), where + ".outlier_weight");
  }
  if (obj.contains("n_theta")) {
    prior.n_theta = as_number(obj.at("n_theta"), where + ".n_theta");
  }
  if (obj.contains("n_psi")) {
    prior.n_psi = as_number(obj.at("n_psi"), where + ".n_psi");
  }
  if (obj.contains("outlier_from_data")) {
    prior.outlier_from_data =
        as_bool(obj.at("outlier_from_data"), where + ".outlier_from_data");
  }
  return prior;
}

McmcConfig parse_mcmc(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  check_keys(obj, where,
             {"burn_in", "production", "thin", "rj_enabled",
              "nu_proposal_halfwidth", "activation_threshold", "seed",
              "workers", "init", "predictive_samples", "predictive_pooled",
              "prior_only"});
  McmcConfig mcmc;
  if (obj.contains("burn_in")) {
    mcmc.burn_in =
        static_cast<int>(as_integer(obj.at("burn_in"), where + ".burn_in"));
  }
  if (obj.contains("production")) {
    mcmc.production = static_cast<int>(
        as_integer(obj.at("production"), where + ".production"));
  }
  if (obj.contains("thin")) {
    mcmc.thin = static_cast<int>(as_integer(obj.at("thin"), where + ".thin"));
  }
  if (obj.contains("rj_enabled")) {
    mcmc.rj_enabled = as_bool(obj.at("rj_enabled"), where + ".rj_enabled");
  }
  if (obj.contains("nu_proposal_halfwidth")) {
    mcmc.nu_proposal_halfwidth = static_cast<int>(as_integer(
        obj.at("nu_proposal_halfwidth"), where + ".nu_proposal_halfwidth"));
  }
  if (obj.contains("activation_threshold")) {
    mcmc.activation_threshold = as_number(obj.at("activation_threshold"),
                                          where + ".activation_threshold");
  }
  if (obj.contains("seed")) {
    mcmc.seed = static_cast<std::uint64_t>(
        as_integer(obj.at("seed"), where + ".seed"));
  }
  if (obj.contains("workers")) {
    mcmc.workers =
        static_cast<int>(as_integer(obj.at("workers"), where + ".workers"));
  }
  if (obj.contains("init")) {
    const std::string init = as_string(obj.at("init"), where + ".init");
    if (init == "kmeans") {
      mcmc.init = McmcConfig::Init::kmeans;
    } else if (init == "prior_mean") {
      mcmc.init = McmcConfig::Init::prior_mean;
    } else {
      throw ConfigError(where + ".init: expected \"kmeans\" or \"prior_mean\"");
    }
  }
  if (obj.contains("predictive_samples")) {
    const json& ids = obj.at("predictive_samples");
    if (!ids.is_array()) {
      throw ConfigError(where + ".predictive_samples: expected an array");
    }
    for (const json& id : ids) {
      mcmc.predictive_sample_ids.push_back(static_cast<int>(
          as_integer(id, where + ".predictive_samples")));
    }
  }
  if (obj.contains("predictive_pooled")) {
    mcmc.predictive_pooled =
        as_bool(obj.at("predictive_pooled"), where + ".predictive_pooled");
  }
  if (obj.contains("prior_only")) {
    mcmc.prior_only = as_bool(obj.at("prior_only"), where + ".prior_only");
  }
  mcmc.validate();
  return mcmc;
}

MergeConfig parse_merge(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  check_keys(obj, where,
             {"d1", "d2", "dip_alpha", "dip_bootstrap", "project_axes",
              "project_fisher", "hard_assignments", "seed"});
  MergeConfig merge;
  if (obj.contains("d1")) merge.d1 = as_number(obj.at("d1"), where + ".d1");
  if (obj.contains("d2")) merge.d2 = as_number(obj.at("d2"), where + ".d2");
  if (obj.contains("dip_alpha")) {
    merge.dip_alpha = as_number(obj.at("dip_alpha"), where + ".dip_alpha");
  }
  if (obj.contains("dip_bootstrap")) {
    merge.dip_bootstrap = static_cast<int>(
        as_integer(obj.at("dip_bootstrap"), where + ".dip_bootstrap"));
  }
  if (obj.contains("project_axes")) {
    merge.project_axes =
        as_bool(obj.at("project_axes"), where + ".project_axes");
  }
  if (obj.contains("project_fisher")) {
    merge.project_fisher =
        as_bool(obj.at("project_fisher"), where + ".project_fisher");
  }
  if (obj.contains("hard_assignments")) {
    merge.hard_assignments =
        as_bool(obj.at("hard_assignments"), where + ".hard_assignments");
  }
  if (obj.contains("seed")) {
    merge.seed = static_cast<std::uint64_t>(
        as_integer(obj.at("seed"), where + ".seed"));
  }
  merge.validate();
  return merge;
}

/// Marker levels of one informative component; negative = unspecified.
struct Phenotype {
  const char* name;
  double cd4, cd8, cd3, cd19;
};

PriorSpec immuno_prior(const PriorConfig& config, const Dataset& data) {
  if (config.K != 0 && config.K != 17) {
    throw ConfigError("prior.K: the immuno_k17 preset fixes K = 17");
  }
  if (!config.anchors.empty()) {
    throw ConfigError("prior.anchors: not configurable with the immuno_k17 preset");
  }
  const int d = data.dim();
  auto marker_index = [&](const char* name) {
    for (int m = 0; m < d; ++m) {
      if (data.marker_names[m] == name) return m;
    }
    std::string have;
    for (const auto& marker : data.marker_names) {
      if (!have.empty()) have += ", ";
      have += marker;
    }
    throw ConfigError(std::string("the immuno_k17 preset needs a \"") + name +
                      "\" marker column (data has: " + have + ")");
  };
  const int idx[4] = {marker_index("CD4"), marker_index("CD8"),
                      marker_index("CD3"), marker_index("CD19")};

  // Expected scaled expression: positive markers near 0.8, negative near
  // 0.1, unspecified centered at 0.5 with a wide spread.
  constexpr double hi = 0.8, lo = 0.1, un = -1.0;
  constexpr Phenotype phenotypes[] = {
      {"helper_t", hi, lo, hi, lo},  {"cytotoxic_t", lo, hi, hi, lo},
      {"dn_t", lo, lo, hi, lo},      {"b", un, un, lo, hi},
      {"nk", un, un, lo, lo},
  };

  PriorSpec prior = PriorSpec::unit_scale(17, d);
  constexpr double informative_sd = 0.15;
  int k = 0;
  for (const Phenotype& phenotype : phenotypes) {
    Vector center = Vector::Constant(d, 0.5);
    Matrix spread = 0.25 * Matrix::Identity(d, d);
    const double levels[4] = {phenotype.cd4, phenotype.cd8, phenotype.cd3,
                              phenotype.cd19};
    for (int m = 0; m < 4; ++m) {
      if (levels[m] < 0.0) continue;
      center(idx[m]) = levels[m];
      spread(idx[m], idx[m]) = informative_sd * informative_sd;
    }
    prior.t[k] = center;
    prior.S[k] = SpdMatrix::from_matrix(spread);
    ++k;
  }
  // Components 6..17 stay at the non-informative unit-scale defaults and
  // soak up whatever the named phenotypes miss.
  return prior;
}

}  // namespace

RunConfig parse_run_config(const std::string& text,
                           const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(source + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(source + ": expected a JSON object");
  check_keys(doc, source,
             {"samples", "output_dir", "scale", "prior", "mcmc", "merge"});

  RunConfig config;
  const json& samples = require(doc, "samples", source);
  if (!samples.is_array() || samples.empty()) {
    throw ConfigError(source + ".samples: expected a non-empty array of paths");
  }
  for (const json& path : samples) {
    config.samples.push_back(as_string(path, source + ".samples"));
  }
  if (doc.contains("output_dir")) {
    config.output_dir = as_string(doc.at("output_dir"), source + ".output_dir");
  }
  if (doc.contains("scale")) {
    config.scale = as_bool(doc.at("scale"), source + ".scale");
  }
  config.prior = parse_prior(require(doc, "prior", source), source + ".prior");
  if (doc.contains("mcmc")) {
    config.mcmc = parse_mcmc(doc.at("mcmc"), source + ".mcmc");
  }
  if (doc.contains("merge")) {
    config.merge = parse_merge(doc.at("merge"), source + ".merge");
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  RunConfig config = parse_run_config(buffer.str(), path);
  for (const std::string& sample : config.samples) {
    if (!std::filesystem::exists(sample)) {
      throw ConfigError(path + ": sample file does not exist: " + sample);
    }
  }
  return config;
}

PriorSpec resolve_prior(const PriorConfig& config, const Dataset& data) {
  PriorSpec prior;
  if (config.preset == "unit_scale") {
    if (config.K < 1) {
      throw ConfigError("prior.K: the unit_scale preset needs K >= 1");
    }
    prior = PriorSpec::unit_scale(config.K, data.dim(), config.anchors,
                                  config.anchor_spread);
  } else if (config.preset == "immuno_k17") {
    prior = immuno_prior(config, data);
  } else {
    throw ConfigError("prior.preset: unknown preset \"" + config.preset +
                      "\" (expected \"unit_scale\" or \"immuno_k17\")");
  }
  if (config.c_s) prior.c_s = *config.c_s;
  if (config.lambda) {
    if (static_cast<int>(config.lambda->size()) != prior.K) {
      throw ConfigError("prior.lambda: expected " + std::to_string(prior.K) +
                        " rates, got " + std::to_string(config.lambda->size()));
    }
    prior.lambda = *config.lambda;
  }
  if (config.nu_min) prior.nu_min = *config.nu_min;
  if (config.outlier_weight) prior.a(0) = *config.outlier_weight;
  if (config.n_theta) prior.n_theta = *config.n_theta;
  if (config.n_psi) prior.n_psi = *config.n_psi;
  if (config.outlier_from_data) prior.set_outlier_from_data(data);
  prior.validate();
  return prior;
}

}  // namespace hiermix
