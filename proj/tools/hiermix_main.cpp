#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "hiermix/config.hpp"
#include "hiermix/csv.hpp"
#include "hiermix/em.hpp"
#include "hiermix/errors.hpp"
#include "hiermix/geweke.hpp"
#include "hiermix/mcmc.hpp"
#include "hiermix/merge.hpp"
#include "hiermix/pca.hpp"
#include "hiermix/scaling.hpp"
#include "hiermix/summary.hpp"
#include "hiermix/synthetic.hpp"
#include "hiermix/trace_io.hpp"

namespace {

using hiermix::ConfigError;
using hiermix::DataError;
using hiermix::Matrix;
using hiermix::NumericalError;
using hiermix::Vector;
using nlohmann::json;

std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open file for writing");
  out << doc.dump(2) << '\n';
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

/// Shared manifest skeleton: enough to identify the build and re-run the
/// exact command.
json manifest_base(const std::vector<std::string>& argv_copy) {
  std::string command;
  for (const std::string& arg : argv_copy) {
    if (!command.empty()) command += ' ';
    command += arg;
  }
  return json{{"tool", "hiermix"},
              {"version", HIERMIX_VERSION_STR},
              {"command", command},
              {"timestamp", iso_timestamp()}};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

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

Vector json_vector(const json& value, const std::string& where) {
  if (!value.is_array() || value.empty()) {
    throw ConfigError(where + ": expected a non-empty array of numbers");
  }
  Vector out(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (!value[i].is_number()) throw ConfigError(where + ": expected numbers");
    out(i) = value[i].get<double>();
  }
  return out;
}

Matrix json_matrix(const json& value, const std::string& where) {
  if (!value.is_array() || value.empty()) {
    throw ConfigError(where + ": expected a non-empty array of rows");
  }
  const std::size_t cols = value[0].is_array() ? value[0].size() : 0;
  if (cols == 0) throw ConfigError(where + ": expected an array of rows");
  Matrix out(value.size(), cols);
  for (std::size_t r = 0; r < value.size(); ++r) {
    if (!value[r].is_array() || value[r].size() != cols) {
      throw ConfigError(where + ": ragged rows");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!value[r][c].is_number()) {
        throw ConfigError(where + ": expected numbers");
      }
      out(r, c) = value[r][c].get<double>();
    }
  }
  return out;
}

/// A full generator description from JSON, mirroring the preset fields.
hiermix::GeneratorSpec parse_generator_spec(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(path + ": expected a JSON object");
  check_keys(doc, path,
             {"J", "d", "K", "n_cells", "theta", "sigma_theta", "psi", "nu",
              "activation", "base_weights", "weight_concentration",
              "outlier_mean", "outlier_cov", "seed"});
  hiermix::GeneratorSpec spec;
  try {
    spec.J = doc.at("J").get<int>();
    spec.d = doc.at("d").get<int>();
    spec.K = doc.at("K").get<int>();
    spec.n_cells = doc.at("n_cells").get<std::vector<int>>();
    for (const json& v : doc.at("theta")) {
      spec.theta.push_back(json_vector(v, path + ".theta"));
    }
    for (const json& m : doc.at("sigma_theta")) {
      spec.sigma_theta.push_back(json_matrix(m, path + ".sigma_theta"));
    }
    for (const json& m : doc.at("psi")) {
      spec.psi.push_back(json_matrix(m, path + ".psi"));
    }
    spec.nu = doc.at("nu").get<std::vector<int>>();
    for (const json& row : doc.at("activation")) {
      spec.activation.push_back(row.get<std::vector<std::uint8_t>>());
    }
    spec.base_weights = json_vector(doc.at("base_weights"), path + ".base_weights");
    if (doc.contains("weight_concentration")) {
      spec.weight_concentration = doc.at("weight_concentration").get<double>();
    }
    spec.outlier_mean = json_vector(doc.at("outlier_mean"), path + ".outlier_mean");
    spec.outlier_cov = json_matrix(doc.at("outlier_cov"), path + ".outlier_cov");
    if (doc.contains("seed")) {
      spec.seed = doc.at("seed").get<std::uint64_t>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return spec;
}

json acceptance_rates(const hiermix::SamplerCounters& c) {
  auto rate = [](std::int64_t accepts, std::int64_t proposals) {
    return proposals > 0 ? static_cast<double>(accepts) /
                               static_cast<double>(proposals)
                         : 0.0;
  };
  return json{{"nu", rate(c.nu_accepts, c.nu_proposals)},
              {"birth", rate(c.birth_accepts, c.birth_proposals)},
              {"death", rate(c.death_accepts, c.death_proposals)},
              {"nu_proposals", c.nu_proposals},
              {"birth_proposals", c.birth_proposals},
              {"death_proposals", c.death_proposals},
              {"param_draw_failures", c.param_draw_failures}};
}

struct SimulateOptions {
  std::string preset;
  std::string spec_path;
  double scale = 1.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
};

int run_simulate(const SimulateOptions& options,
                 const std::vector<std::string>& argv_copy) {
  const auto start = std::chrono::steady_clock::now();
  hiermix::GeneratorSpec spec;
  if (!options.preset.empty() && !options.spec_path.empty()) {
    throw ConfigError("simulate: --preset and --spec are mutually exclusive");
  }
  if (options.preset == "sec31") {
    spec = hiermix::GeneratorSpec::sec31(options.scale);
  } else if (options.preset == "desk") {
    spec = hiermix::GeneratorSpec::desk();
  } else if (!options.preset.empty()) {
    throw ConfigError("simulate: unknown preset \"" + options.preset +
                      "\" (expected \"sec31\" or \"desk\")");
  } else if (!options.spec_path.empty()) {
    spec = parse_generator_spec(options.spec_path);
  } else {
    throw ConfigError("simulate: need --preset or --spec");
  }
  if (options.seed_set) spec.seed = options.seed;

  const auto [data, truth] = hiermix::generate_synthetic(spec);
  const auto paths = hiermix::save_samples(data, join_path(options.out, "samples"));
  hiermix::save_ground_truth(truth, join_path(options.out, "truth"));

  json manifest = manifest_base(argv_copy);
  manifest["seed"] = spec.seed;
  manifest["samples"] = paths;
  manifest["n_samples"] = spec.J;
  manifest["markers"] = data.marker_names;
  if (!options.preset.empty()) {
    manifest["preset"] = options.preset;
    manifest["preset_scale"] = options.scale;
  } else {
    manifest["spec_file"] = options.spec_path;
    manifest["spec_hash"] = hiermix::fnv1a_hex(read_text_file(options.spec_path));
  }
  manifest["wall_seconds"] = seconds_since(start);
  write_json_file(join_path(options.out, "manifest.json"), manifest);
  std::cout << "wrote " << paths.size() << " samples under " << options.out
            << '\n';
  return 0;
}

/// Loads the samples a config points at and applies the configured scaling.
/// The transform is refitted from the data, so downstream commands recover
/// the exact transform the fit used.
hiermix::Dataset load_configured_data(const hiermix::RunConfig& config,
                                      hiermix::ScalingTransform* transform_out) {
  hiermix::Dataset data = hiermix::load_samples(config.samples);
  if (config.scale) {
    const hiermix::ScalingTransform transform = hiermix::fit_scaling(data);
    data = hiermix::apply_scaling(data, transform);
    if (transform_out) *transform_out = transform;
  }
  return data;
}

void write_scaling_csv(const hiermix::ScalingTransform& transform,
                       const std::vector<std::string>& markers,
                       const std::string& path) {
  hiermix::CsvTable table;
  table.header = {"marker", "q01", "q99"};
  for (std::size_t m = 0; m < markers.size(); ++m) {
    table.rows.push_back({markers[m], hiermix::format_double(transform.q01(m)),
                          hiermix::format_double(transform.q99(m))});
  }
  hiermix::write_csv(path, table);
}

json config_echo(const std::string& config_path) {
  const std::string text = read_text_file(config_path);
  return json{{"path", config_path},
              {"hash", hiermix::fnv1a_hex(text)},
              {"content", json::parse(text)}};
}

int run_fit(const std::string& config_path,
            const std::vector<std::string>& argv_copy) {
  const auto start = std::chrono::steady_clock::now();
  const hiermix::RunConfig config = hiermix::load_run_config(config_path);
  hiermix::ScalingTransform transform;
  const hiermix::Dataset data = load_configured_data(config, &transform);
  const hiermix::PriorSpec prior = hiermix::resolve_prior(config.prior, data);
  const hiermix::Trace trace = hiermix::run_chain(data, prior, config.mcmc);

  std::filesystem::create_directories(config.output_dir);
  hiermix::save_trace(trace, join_path(config.output_dir, "trace"));
  if (config.scale) {
    write_scaling_csv(transform, data.marker_names,
                      join_path(config.output_dir, "scaling.csv"));
  }

  json manifest = manifest_base(argv_copy);
  manifest["config"] = config_echo(config_path);
  manifest["seed"] = config.mcmc.seed;
  manifest["workers"] = config.mcmc.workers;
  manifest["n_draws"] = trace.n_draws();
  manifest["acceptance_rates"] = acceptance_rates(trace.counters);
  manifest["jitter_events"] = trace.jitter_events;
  manifest["label_switch_pairs"] = trace.label_switch_pairs;
  manifest["scaled"] = config.scale;
  manifest["wall_seconds"] = seconds_since(start);
  write_json_file(join_path(config.output_dir, "manifest.json"), manifest);
  std::cout << "trace written to " << join_path(config.output_dir, "trace")
            << " (" << trace.n_draws() << " draws)\n";
  return 0;
}

int run_merge(const std::string& trace_dir, const std::string& config_path,
              const std::vector<std::string>& argv_copy) {
  const auto start = std::chrono::steady_clock::now();
  const hiermix::RunConfig config = hiermix::load_run_config(config_path);
  const hiermix::Trace trace = hiermix::load_trace(trace_dir);
  const hiermix::Dataset data = load_configured_data(config, nullptr);

  const std::vector<Matrix> w = hiermix::soft_cluster_weights(trace, data);
  std::vector<hiermix::GaussianSummary> summaries;
  for (int k = 1; k <= trace.K; ++k) {
    double mass = 0.0;
    for (const Matrix& wj : w) mass += wj.col(k).sum();
    if (mass > 0.0) {
      summaries.push_back(hiermix::gaussian_approx({k}, w, data));
    } else {
      // Never-activated component: an empty summary that the greedy pass
      // skips.
      hiermix::GaussianSummary empty;
      empty.mean = Vector::Zero(trace.d);
      empty.cov = Matrix::Identity(trace.d, trace.d);
      empty.weight = 0.0;
      summaries.push_back(empty);
    }
  }
  const hiermix::MergeResult result =
      hiermix::merge_clusters(summaries, w, data, config.merge);

  const std::string out = config.output_dir;
  std::filesystem::create_directories(out);
  hiermix::save_merge(result, out);
  const Matrix sizes = hiermix::population_sizes(trace, result);
  hiermix::save_population_sizes(sizes, data.sample_ids, result.population_ids,
                                 join_path(out, "population_sizes.csv"));
  std::vector<double> levels = hiermix::kBoxWhiskerLevels;
  levels.insert(levels.begin() + 2, 0.5);
  const std::vector<Matrix> quantiles =
      hiermix::population_quantiles(result.soft_weights, data, levels);
  hiermix::save_population_quantiles(quantiles, result.population_ids,
                                     data.marker_names, levels,
                                     join_path(out, "population_quantiles.csv"));

  json manifest = manifest_base(argv_copy);
  manifest["config"] = config_echo(config_path);
  manifest["trace_dir"] = trace_dir;
  manifest["populations"] = result.population_ids;
  manifest["merge_steps"] = result.merge_log.size();
  manifest["wall_seconds"] = seconds_since(start);
  write_json_file(join_path(out, "merge_manifest.json"), manifest);
  std::cout << result.population_ids.size() << " populations from " << trace.K
            << " components (" << result.merge_log.size() << " merges)\n";
  return 0;
}

int run_summarize(const std::string& trace_dir, const std::string& truth_dir,
                  const std::string& out,
                  const std::vector<std::string>& argv_copy) {
  const auto start = std::chrono::steady_clock::now();
  const hiermix::Trace trace = hiermix::load_trace(trace_dir);
  const hiermix::PosteriorSummary summary = hiermix::summarize(trace);
  std::filesystem::create_directories(out);
  hiermix::save_summary(summary, out);
  json manifest = manifest_base(argv_copy);
  manifest["trace_dir"] = trace_dir;
  if (!truth_dir.empty()) {
    const hiermix::GroundTruth truth = hiermix::load_ground_truth(truth_dir);
    const auto rows = hiermix::recovery_table(summary, truth);
    hiermix::save_recovery(rows, join_path(out, "recovery.csv"));
    int covered = 0;
    for (const auto& row : rows) covered += row.covered ? 1 : 0;
    manifest["recovery_rows"] = rows.size();
    manifest["recovery_covered"] = covered;
    std::cout << "recovery: " << covered << "/" << rows.size()
              << " intervals cover the truth\n";
  }
  manifest["wall_seconds"] = seconds_since(start);
  write_json_file(join_path(out, "summary_manifest.json"), manifest);
  std::cout << "summary tables written to " << out << '\n';
  return 0;
}

int run_pca(const std::string& populations_path, const std::string& out,
            const std::vector<std::string>& argv_copy) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> row_ids, column_names;
  const Matrix sizes =
      hiermix::load_labeled_matrix(populations_path, &row_ids, &column_names);
  const hiermix::PcaResult result = hiermix::pca_biplot(sizes);
  std::filesystem::create_directories(out);
  hiermix::save_pca(result, row_ids, column_names, out);
  json manifest = manifest_base(argv_copy);
  manifest["populations"] = populations_path;
  manifest["explained_ratio"] =
      std::vector<double>(result.explained_variance_ratio.data(),
                          result.explained_variance_ratio.data() +
                              result.explained_variance_ratio.size());
  manifest["wall_seconds"] = seconds_since(start);
  write_json_file(join_path(out, "pca_manifest.json"), manifest);
  std::cout << "pca tables written to " << out << '\n';
  return 0;
}

struct ValidateOptions {
  int iterations = 10000;
  std::uint64_t seed = 414;
  int n_samples = 3;
  int cells = 20;
  double threshold = 4.0;
  std::string mutation = "none";
  std::string out = ".";
};

int run_validate(const ValidateOptions& options,
                 const std::vector<std::string>& argv_copy) {
  const auto start = std::chrono::steady_clock::now();
  hiermix::SamplerMutation mutation = hiermix::SamplerMutation::none;
  if (options.mutation == "drop_sigma_prior_scale") {
    mutation = hiermix::SamplerMutation::drop_sigma_prior_scale;
  } else if (options.mutation != "none") {
    throw ConfigError("validate: unknown mutation \"" + options.mutation +
                      "\"");
  }
  const hiermix::PriorSpec prior = hiermix::joint_check_prior(2, 2);
  const std::vector<int> n_cells(options.n_samples, options.cells);
  const hiermix::GewekeReport report = hiermix::getting_it_right(
      prior, n_cells, options.iterations, options.seed, mutation);

  std::filesystem::create_directories(options.out);
  hiermix::save_geweke(report, join_path(options.out, "geweke.json"));
  for (const auto& f : report.functionals) {
    std::printf("%-28s z = %+7.3f\n", f.name.c_str(), f.z);
  }
  std::printf("max |z| = %.3f over %zu functionals (threshold %.1f)\n",
              report.max_abs_z, report.functionals.size(), options.threshold);

  json manifest = manifest_base(argv_copy);
  manifest["iterations"] = options.iterations;
  manifest["seed"] = options.seed;
  manifest["mutation"] = options.mutation;
  manifest["max_abs_z"] = report.max_abs_z;
  manifest["pass"] = report.pass(options.threshold);
  manifest["wall_seconds"] = seconds_since(start);
  write_json_file(join_path(options.out, "validate_manifest.json"), manifest);
  return report.pass(options.threshold) ? 0 : 1;
}

struct EmOptions {
  std::string sample_path;
  int k = 0;
  int restarts = 10;
  std::uint64_t seed = 1;
  std::string out = ".";
};

int run_em(const EmOptions& options,
           const std::vector<std::string>& argv_copy) {
  const auto start = std::chrono::steady_clock::now();
  const hiermix::Dataset data = hiermix::load_samples({options.sample_path});
  hiermix::RngStream rng(options.seed, 0);
  const hiermix::EmFit fit =
      hiermix::em_baseline(data.samples[0], options.k, rng, options.restarts);

  std::filesystem::create_directories(options.out);
  hiermix::CsvTable weights;
  weights.header = {"component", "weight"};
  for (int k = 0; k < options.k; ++k) {
    weights.rows.push_back(
        {std::to_string(k + 1), hiermix::format_double(fit.weights[k])});
  }
  hiermix::write_csv(join_path(options.out, "em_weights.csv"), weights);

  hiermix::CsvTable means;
  means.header = {"component", "coord", "value"};
  hiermix::CsvTable covs;
  covs.header = {"component", "row", "col", "value"};
  const int d = data.dim();
  for (int k = 0; k < options.k; ++k) {
    for (int c = 0; c < d; ++c) {
      means.rows.push_back({std::to_string(k + 1), std::to_string(c),
                            hiermix::format_double(fit.means[k](c))});
      for (int r = 0; r < d; ++r) {
        covs.rows.push_back({std::to_string(k + 1), std::to_string(r),
                             std::to_string(c),
                             hiermix::format_double(fit.covs[k](r, c))});
      }
    }
  }
  hiermix::write_csv(join_path(options.out, "em_means.csv"), means);
  hiermix::write_csv(join_path(options.out, "em_covs.csv"), covs);

  std::ofstream assignments(join_path(options.out, "em_assignments.csv"),
                            std::ios::binary);
  assignments << "cell,component\n";
  for (std::size_t i = 0; i < fit.hard_assignments.size(); ++i) {
    assignments << i << ',' << fit.hard_assignments[i] + 1 << '\n';
  }

  json manifest = manifest_base(argv_copy);
  manifest["sample"] = options.sample_path;
  manifest["k"] = options.k;
  manifest["seed"] = options.seed;
  manifest["log_likelihood"] = fit.log_likelihood;
  manifest["iterations"] = fit.iterations;
  manifest["restarts_used"] = fit.restarts_used;
  manifest["wall_seconds"] = seconds_since(start);
  write_json_file(join_path(options.out, "em_manifest.json"), manifest);
  std::cout << "em log-likelihood " << fit.log_likelihood << " after "
            << fit.iterations << " iterations\n";
  return 0;
}

int print_error(const char* kind, const std::string& message, int code) {
  const json doc{{"error", kind}, {"message", message}};
  std::cerr << doc.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> argv_copy(argv, argv + argc);
  CLI::App app{"Hierarchical mixture modelling of multi-sample cytometry data"};
  app.require_subcommand(1);

  SimulateOptions simulate;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Draw a synthetic dataset with known ground truth");
  sim->add_option("--preset", simulate.preset,
                  "Built-in generator: \"sec31\" or \"desk\"");
  sim->add_option("--spec", simulate.spec_path,
                  "JSON file with a full generator description");
  sim->add_option("--scale", simulate.scale,
                  "Cell-count multiplier for --preset sec31");
  sim->add_option("--seed", simulate.seed, "Override the generator seed")
      ->each([&](const std::string&) { simulate.seed_set = true; });
  sim->add_option("--out", simulate.out, "Output directory")->required();

  std::string fit_config;
  CLI::App* fit = app.add_subcommand("fit", "Run the posterior sampler");
  fit->add_option("--config", fit_config, "JSON run configuration")
      ->required();

  std::string merge_trace, merge_config;
  CLI::App* merge = app.add_subcommand(
      "merge", "Merge fitted components into populations");
  merge->add_option("--trace", merge_trace, "Trace directory from fit")
      ->required();
  merge->add_option("--config", merge_config, "JSON run configuration")
      ->required();

  std::string summarize_trace, summarize_truth, summarize_out = ".";
  CLI::App* summarize = app.add_subcommand(
      "summarize", "Posterior point estimates and credible intervals");
  summarize->add_option("--trace", summarize_trace, "Trace directory from fit")
      ->required();
  summarize->add_option("--truth", summarize_truth,
                        "Ground-truth directory from simulate (adds a "
                        "recovery table)");
  summarize->add_option("--out", summarize_out, "Output directory");

  std::string pca_populations, pca_out = ".";
  CLI::App* pca = app.add_subcommand(
      "pca", "Principal components of a population-size matrix");
  pca->add_option("--populations", pca_populations,
                  "population_sizes.csv from merge")
      ->required();
  pca->add_option("--out", pca_out, "Output directory");

  ValidateOptions validate;
  CLI::App* val = app.add_subcommand(
      "validate", "Joint-distribution check of the sampler (exit 1 on fail)");
  val->add_option("--iterations", validate.iterations, "Chain length");
  val->add_option("--seed", validate.seed, "RNG seed");
  val->add_option("--samples", validate.n_samples, "Synthetic sample count");
  val->add_option("--cells", validate.cells, "Cells per synthetic sample");
  val->add_option("--threshold", validate.threshold, "|z| pass threshold");
  val->add_option("--mutation", validate.mutation,
                  "\"none\" or \"drop_sigma_prior_scale\" (should fail)");
  val->add_option("--out", validate.out, "Output directory");

  EmOptions em;
  CLI::App* emb = app.add_subcommand(
      "em-baseline", "Single-sample EM mixture fit for comparison");
  emb->add_option("--sample", em.sample_path, "One sample CSV")->required();
  emb->add_option("--k", em.k, "Component count")->required();
  emb->add_option("--restarts", em.restarts, "Independent EM starts");
  emb->add_option("--seed", em.seed, "RNG seed");
  emb->add_option("--out", em.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return print_error("config", e.what(), 2);
  }

  try {
    if (sim->parsed()) return run_simulate(simulate, argv_copy);
    if (fit->parsed()) return run_fit(fit_config, argv_copy);
    if (merge->parsed()) return run_merge(merge_trace, merge_config, argv_copy);
    if (summarize->parsed()) {
      return run_summarize(summarize_trace, summarize_truth, summarize_out,
                           argv_copy);
    }
    if (pca->parsed()) return run_pca(pca_populations, pca_out, argv_copy);
    if (val->parsed()) return run_validate(validate, argv_copy);
    if (emb->parsed()) return run_em(em, argv_copy);
  } catch (const ConfigError& e) {
    return print_error("config", e.what(), 2);
  } catch (const DataError& e) {
    return print_error("data", e.what(), 3);
  } catch (const NumericalError& e) {
    return print_error("numerical", e.what(), 4);
  } catch (const std::exception& e) {
    return print_error("internal", e.what(), 1);
  }
  return 0;
}
