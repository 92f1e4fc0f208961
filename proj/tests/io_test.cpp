#include <bit>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "doctest.h"
#include "hiermix/config.hpp"
#include "hiermix/csv.hpp"
#include "hiermix/errors.hpp"
#include "hiermix/mcmc.hpp"
#include "hiermix/scaling.hpp"
#include "hiermix/stats.hpp"
#include "hiermix/synthetic.hpp"
#include "hiermix/trace_io.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace hiermix;
using testutil::bitwise_equal;

namespace {

/// Fresh scratch directory per (sub)case, removed up front so reruns start
/// clean.
fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hiermix_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

bool bits_equal(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

/// Runs `fn`, expecting it to throw Error, and hands back the message so a
/// test can assert several substrings of one diagnostic.
template <typename Error, typename Fn>
std::string thrown_message(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  } catch (const std::exception& e) {
    return std::string("wrong exception type: ") + e.what();
  }
  return "no exception thrown";
}

bool contains(const std::string& text, const std::string& part) {
  return text.find(part) != std::string::npos;
}

Dataset random_dataset(int n_samples, int n_cells, int d, std::uint64_t seed) {
  Dataset data;
  RngStream rng(seed, 0);
  for (int m = 0; m < d; ++m) data.marker_names.push_back("m" + std::to_string(m));
  for (int j = 0; j < n_samples; ++j) {
    data.sample_ids.push_back("s" + std::to_string(j));
    Matrix cells(n_cells, d);
    for (int i = 0; i < n_cells; ++i) {
      for (int m = 0; m < d; ++m) cells(i, m) = rng.normal();
    }
    data.samples.push_back(std::move(cells));
  }
  return data;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("doubles survive text serialization bit for bit") {
  const std::vector<double> values = {
      0.0,           -0.0,       1.0 / 3.0,      0.1,
      -1.0,          1e-300,     1e300,          5e-324,
      1.7976931348623157e308,    123456789.123456789,
      2.718281828459045,         -9.869604401089358e-9};
  for (double v : values) {
    CAPTURE(v);
    const std::string text = format_double(v);
    CHECK(bits_equal(std::strtod(text.c_str(), nullptr), v));
  }
  // Values with a short exact form should not be blown up to 17 digits.
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-0.0) == "-0");
  CHECK(format_double(1e300) == "1e+300");
  CHECK_THROWS_AS((void)format_double(std::numeric_limits<double>::infinity()),
                  DataError);
  CHECK_THROWS_AS((void)format_double(std::nan("")), DataError);

  CHECK(parse_double("1.25", "t") == 1.25);
  CHECK_THROWS_AS((void)parse_double("", "t"), DataError);
  CHECK_THROWS_AS((void)parse_double("1.2.3", "t"), DataError);
  CHECK_THROWS_AS((void)parse_double("12 cells", "t"), DataError);
  CHECK_THROWS_AS((void)parse_double("nan", "t"), DataError);
  CHECK_THROWS_AS((void)parse_double("inf", "t"), DataError);
}

TEST_CASE("csv reader handles quoting, escapes, and line endings") {
  const fs::path dir = scratch_dir("csv_quoting");

  SUBCASE("quoted fields with separators, escapes, and newlines") {
    write_file(dir / "quoted.csv",
               "name,note,x\r\n"
               "alpha,\"a,b\",1\r\n"
               "\"be\"\"ta\",\"line\nbreak\",2\n"
               "gamma,,3");
    const CsvTable table = read_csv((dir / "quoted.csv").string());
    REQUIRE(table.header == std::vector<std::string>{"name", "note", "x"});
    REQUIRE(table.rows.size() == 3);
    CHECK(table.rows[0][1] == "a,b");
    CHECK(table.rows[1][0] == "be\"ta");
    CHECK(table.rows[1][1] == "line\nbreak");
    CHECK(table.rows[2][1] == "");
    CHECK(table.column("x") == 2);
    CHECK_THROWS_AS((void)table.column("y"), DataError);
  }

  SUBCASE("writer quotes exactly what needs quoting and round-trips") {
    CsvTable table;
    table.header = {"plain", "with,comma", "with\"quote"};
    table.rows.push_back({"a", "1,2", "say \"hi\""});
    table.rows.push_back({"multi\nline", "", "-0.5"});
    const std::string path = (dir / "written.csv").string();
    write_csv(path, table);
    const CsvTable back = read_csv(path);
    CHECK(back.header == table.header);
    CHECK(back.rows == table.rows);
    // Unquoted content stays unquoted on disk.
    CHECK(read_file(path).substr(0, 6) == "plain,");
  }

  SUBCASE("malformed input is rejected") {
    write_file(dir / "unbalanced.csv", "a,b\n\"open,2\n");
    CHECK_THROWS_AS((void)read_csv((dir / "unbalanced.csv").string()),
                    DataError);
    write_file(dir / "ragged.csv", "a,b\n1,2\n1,2,3\n");
    CHECK_THROWS_WITH_AS((void)read_csv((dir / "ragged.csv").string()),
                         doctest::Contains("record 3"), DataError);
    write_file(dir / "stray.csv", "a,b\nx\"y,2\n");
    CHECK_THROWS_AS((void)read_csv((dir / "stray.csv").string()), DataError);
    write_file(dir / "trailing.csv", "a,b\n\"x\"y,2\n");
    CHECK_THROWS_AS((void)read_csv((dir / "trailing.csv").string()), DataError);
    write_file(dir / "empty.csv", "");
    CHECK_THROWS_AS((void)read_csv((dir / "empty.csv").string()), DataError);
    CHECK_THROWS_AS((void)read_csv((dir / "missing.csv").string()), DataError);
  }
}

TEST_CASE("sample tables round-trip bitwise and diagnose bad cells") {
  const fs::path dir = scratch_dir("samples");

  SUBCASE("save/load preserves every value, id, and marker") {
    const Dataset data = random_dataset(3, 40, 4, 11);
    const auto paths = save_samples(data, (dir / "out").string());
    REQUIRE(paths.size() == 3);
    const Dataset back = load_samples(paths);
    CHECK(back.marker_names == data.marker_names);
    CHECK(back.sample_ids == data.sample_ids);
    CHECK_FALSE(back.scaled);
    for (int j = 0; j < 3; ++j) {
      CHECK(bitwise_equal(back.samples[j], data.samples[j]));
    }
  }

  SUBCASE("header mismatch names both files and both headers") {
    write_file(dir / "a.csv", "CD4,CD8\n1,2\n");
    write_file(dir / "b.csv", "CD4,CD3\n1,2\n");
    const std::string msg = thrown_message<DataError>([&] {
      (void)load_samples({(dir / "a.csv").string(), (dir / "b.csv").string()});
    });
    CHECK(contains(msg, "CD8"));
    CHECK(contains(msg, "CD3"));
    CHECK(contains(msg, "a.csv"));
    CHECK(contains(msg, "b.csv"));
  }

  SUBCASE("bad cells are reported with file, row, and column") {
    write_file(dir / "nan.csv", "CD4,CD8\n0.5,0.25\n0.5,nan\n");
    const std::string msg = thrown_message<DataError>(
        [&] { (void)load_samples({(dir / "nan.csv").string()}); });
    CHECK(contains(msg, "nan.csv"));
    CHECK(contains(msg, "row 2"));
    CHECK(contains(msg, "CD8"));
    CHECK(contains(msg, "non-finite"));
    write_file(dir / "inf.csv", "CD4,CD8\n inf,0.25\n");
    CHECK_THROWS_AS((void)load_samples({(dir / "inf.csv").string()}), DataError);
    write_file(dir / "junk.csv", "CD4,CD8\n0.5,zero\n");
    const std::string junk = thrown_message<DataError>(
        [&] { (void)load_samples({(dir / "junk.csv").string()}); });
    CHECK(contains(junk, "row 1"));
    CHECK(contains(junk, "zero"));
  }

  SUBCASE("structural problems are rejected") {
    write_file(dir / "headeronly.csv", "CD4,CD8\n");
    CHECK_THROWS_WITH_AS((void)load_samples({(dir / "headeronly.csv").string()}),
                         doctest::Contains("no data rows"), DataError);
    fs::create_directories(dir / "other");
    write_file(dir / "dup.csv", "CD4\n1\n");
    write_file(dir / "other/dup.csv", "CD4\n2\n");
    CHECK_THROWS_WITH_AS(
        (void)load_samples(
            {(dir / "dup.csv").string(), (dir / "other/dup.csv").string()}),
        doctest::Contains("duplicate sample id"), DataError);
    CHECK_THROWS_AS((void)load_samples({}), DataError);
  }
}

TEST_CASE("percentile scaling matches the grid oracle") {
  // Marker 0 is the integer grid 0..100; marker 1 the same grid under an
  // affine map.  Split across two samples to exercise pooling.
  Dataset data;
  data.marker_names = {"raw", "affine"};
  data.sample_ids = {"lo", "hi"};
  Matrix lo(41, 2), hi(60, 2);
  for (int v = 0; v <= 40; ++v) {
    lo(v, 0) = v;
    lo(v, 1) = 2.0 * v + 5.0;
  }
  for (int v = 41; v <= 100; ++v) {
    hi(v - 41, 0) = v;
    hi(v - 41, 1) = 2.0 * v + 5.0;
  }
  data.samples = {lo, hi};

  const ScalingTransform transform = fit_scaling(data);
  CHECK(transform.q01(0) == 1.0);
  CHECK(transform.q99(0) == 99.0);
  CHECK(transform.q01(1) == 7.0);
  CHECK(transform.q99(1) == 203.0);

  const Dataset scaled = apply_scaling(data, transform);
  CHECK(scaled.scaled);
  CHECK_FALSE(data.scaled);

  // The pooled 1%/99% percentiles of the transformed data sit exactly at 0
  // and 1, and the affine marker collapses onto the raw one bit for bit.
  std::vector<double> pooled;
  for (const Matrix& cells : scaled.samples) {
    for (Eigen::Index r = 0; r < cells.rows(); ++r) pooled.push_back(cells(r, 0));
  }
  std::sort(pooled.begin(), pooled.end());
  CHECK(quantile_type7(pooled, 0.01) == 0.0);
  CHECK(quantile_type7(pooled, 0.99) == 1.0);
  for (int j = 0; j < 2; ++j) {
    CHECK(bitwise_equal(Vector(scaled.samples[j].col(0)),
                        Vector(scaled.samples[j].col(1))));
  }

  SUBCASE("double scaling is refused") {
    CHECK_THROWS_AS((void)apply_scaling(scaled, transform), ConfigError);
  }
  SUBCASE("dimension mismatch is refused") {
    ScalingTransform narrow;
    narrow.q01 = Vector::Zero(1);
    narrow.q99 = Vector::Ones(1);
    CHECK_THROWS_AS((void)apply_scaling(data, narrow), DataError);
  }
  SUBCASE("constant markers and tiny pools are refused") {
    Dataset flat = data;
    for (Matrix& cells : flat.samples) cells.col(1).setConstant(3.5);
    CHECK_THROWS_WITH_AS((void)fit_scaling(flat), doctest::Contains("affine"),
                         DataError);
    Dataset tiny = random_dataset(1, 99, 2, 3);
    CHECK_THROWS_WITH_AS((void)fit_scaling(tiny),
                         doctest::Contains("at least 100"), DataError);
  }
  SUBCASE("affine changes of raw units do not change the scaled data") {
    const Dataset base = random_dataset(2, 120, 3, 21);
    Dataset shifted = base;
    const double slope[3] = {2.5, 0.04, 7.0};
    const double offset[3] = {-3.0, 11.0, 0.125};
    for (Matrix& cells : shifted.samples) {
      for (int m = 0; m < 3; ++m) {
        cells.col(m) = slope[m] * cells.col(m).array() + offset[m];
      }
    }
    const Dataset a = apply_scaling(base, fit_scaling(base));
    const Dataset b = apply_scaling(shifted, fit_scaling(shifted));
    for (int j = 0; j < 2; ++j) {
      CHECK((a.samples[j] - b.samples[j]).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("trace serialization round-trips a sampler run exactly") {
  const fs::path dir = scratch_dir("trace");
  GeneratorSpec spec;
  spec.J = 2;
  spec.d = 2;
  spec.K = 2;
  spec.n_cells = {50, 70};
  spec.theta = {Vector::Constant(2, 0.3), Vector::Constant(2, 0.7)};
  spec.sigma_theta = {0.001 * Matrix::Identity(2, 2),
                      0.001 * Matrix::Identity(2, 2)};
  spec.psi = {0.05 * Matrix::Identity(2, 2), 0.05 * Matrix::Identity(2, 2)};
  spec.nu = {20, 20};
  spec.activation = {{1, 1}, {1, 1}};
  spec.base_weights = Vector::Zero(3);
  spec.base_weights << 0.02, 0.53, 0.45;
  spec.outlier_mean = Vector::Constant(2, 0.5);
  spec.outlier_cov = 0.25 * Matrix::Identity(2, 2);
  spec.seed = 31;
  const auto [data, truth] = generate_synthetic(spec);

  PriorSpec prior = PriorSpec::unit_scale(2, 2);
  prior.set_outlier_from_data(data);
  McmcConfig config;
  config.burn_in = 20;
  config.production = 40;
  config.seed = 5;
  config.predictive_sample_ids = {0};
  config.predictive_pooled = true;
  const Trace trace = run_chain(data, prior, config);

  save_trace(trace, dir.string());
  const Trace back = load_trace(dir.string());

  CHECK(back.K == trace.K);
  CHECK(back.J == trace.J);
  CHECK(back.d == trace.d);
  CHECK(back.production == trace.production);
  CHECK(back.thin == trace.thin);
  CHECK(back.n_cells == trace.n_cells);
  REQUIRE(back.n_draws() == trace.n_draws());
  for (int t = 0; t < trace.n_draws(); ++t) {
    CHECK(back.log_posterior[t] == trace.log_posterior[t]);
    for (int k = 0; k < trace.K; ++k) {
      CHECK(bitwise_equal(back.theta[t][k], trace.theta[t][k]));
      CHECK(bitwise_equal(back.sigma_theta[t][k], trace.sigma_theta[t][k]));
      CHECK(bitwise_equal(back.psi[t][k], trace.psi[t][k]));
      CHECK(back.nu[t][k] == trace.nu[t][k]);
    }
    for (int j = 0; j < trace.J; ++j) {
      CHECK(bitwise_equal(back.pi[t][j], trace.pi[t][j]));
      CHECK(back.z[t][j] == trace.z[t][j]);
      for (int k = 0; k < trace.K; ++k) {
        CHECK(bitwise_equal(back.mu[t][j][k], trace.mu[t][j][k]));
        CHECK(bitwise_equal(back.sigma[t][j][k], trace.sigma[t][j][k]));
      }
    }
  }
  CHECK(back.predictive_labels == trace.predictive_labels);
  REQUIRE(back.predictive.size() == trace.predictive.size());
  for (std::size_t t = 0; t < trace.predictive.size(); ++t) {
    for (std::size_t s = 0; s < trace.predictive[t].size(); ++s) {
      CHECK(bitwise_equal(back.predictive[t][s], trace.predictive[t][s]));
    }
  }
  CHECK(back.activation_counts == trace.activation_counts);
  REQUIRE(back.assignment_counts.size() == trace.assignment_counts.size());
  for (std::size_t j = 0; j < trace.assignment_counts.size(); ++j) {
    CHECK(bitwise_equal(back.assignment_counts[j], trace.assignment_counts[j]));
    CHECK(bitwise_equal(back.pi_sums[j], trace.pi_sums[j]));
  }
  CHECK(back.counters.nu_proposals == trace.counters.nu_proposals);
  CHECK(back.counters.nu_accepts == trace.counters.nu_accepts);
  CHECK(back.counters.birth_proposals == trace.counters.birth_proposals);
  CHECK(back.counters.birth_accepts == trace.counters.birth_accepts);
  CHECK(back.counters.death_proposals == trace.counters.death_proposals);
  CHECK(back.counters.death_accepts == trace.counters.death_accepts);
  CHECK(back.counters.param_draw_failures == trace.counters.param_draw_failures);
  CHECK(back.jitter_events == trace.jitter_events);
  CHECK(back.label_switch_pairs == trace.label_switch_pairs);

  SUBCASE("corrupted index is refused") {
    std::string text = read_file(dir / "nu.csv");
    const auto at = text.find("\n0,1,");
    REQUIRE(at != std::string::npos);
    text.replace(at, 5, "\n0,9,");
    write_file(dir / "nu.csv", text);
    CHECK_THROWS_WITH_AS((void)load_trace(dir.string()),
                         doctest::Contains("out of range"), DataError);
  }
  SUBCASE("truncated family is refused") {
    std::string text = read_file(dir / "theta.csv");
    text.erase(text.find_last_of('\n', text.size() - 2) + 1);
    write_file(dir / "theta.csv", text);
    CHECK_THROWS_WITH_AS((void)load_trace(dir.string()),
                         doctest::Contains("data rows"), DataError);
  }
  SUBCASE("missing meta is refused") {
    fs::remove(dir / "meta.json");
    CHECK_THROWS_AS((void)load_trace(dir.string()), DataError);
  }

  SUBCASE("ground truth tables round-trip") {
    save_ground_truth(truth, (dir / "truth").string());
    const GroundTruth back_truth = load_ground_truth((dir / "truth").string());
    for (int k = 0; k < spec.K; ++k) {
      CHECK(bitwise_equal(back_truth.theta[k], truth.theta[k]));
      CHECK(bitwise_equal(back_truth.sigma_theta[k], truth.sigma_theta[k]));
      CHECK(bitwise_equal(back_truth.psi[k], truth.psi[k]));
      CHECK(back_truth.nu[k] == truth.nu[k]);
    }
    for (int j = 0; j < spec.J; ++j) {
      CHECK(bitwise_equal(back_truth.pi[j], truth.pi[j]));
      CHECK(back_truth.activation[j] == truth.activation[j]);
      CHECK(back_truth.assignments[j] == truth.assignments[j]);
      for (int k = 0; k < spec.K; ++k) {
        CHECK(bitwise_equal(back_truth.mu[j][k], truth.mu[j][k]));
        CHECK(bitwise_equal(back_truth.sigma[j][k], truth.sigma[j][k]));
      }
    }
    CHECK(bitwise_equal(back_truth.outlier_mean, truth.outlier_mean));
    CHECK(bitwise_equal(back_truth.outlier_cov, truth.outlier_cov));
  }
}

TEST_CASE("run configs parse strictly") {
  const std::string valid = R"({
    "samples": ["a.csv", "b.csv"],
    "output_dir": "out",
    "scale": false,
    "prior": {
      "preset": "unit_scale",
      "K": 3,
      "anchors": [[0.2, 0.2], [0.5, 0.5], [0.8, 0.8]],
      "anchor_spread": 0.3,
      "c_s": 2.0,
      "lambda": [0.2, 0.2, 0.2],
      "nu_min": 6,
      "outlier_weight": 2.5,
      "outlier_from_data": false
    },
    "mcmc": {
      "burn_in": 100,
      "production": 400,
      "thin": 2,
      "rj_enabled": false,
      "nu_proposal_halfwidth": 3,
      "activation_threshold": 0.02,
      "seed": 99,
      "workers": 4,
      "init": "prior_mean",
      "predictive_samples": [0, 1],
      "predictive_pooled": true
    },
    "merge": {
      "d1": 0.15,
      "d2": 0.9,
      "dip_alpha": 0.01,
      "dip_bootstrap": 500,
      "project_fisher": false,
      "hard_assignments": true,
      "seed": 12
    }
  })";

  SUBCASE("a full document lands in the right fields") {
    const RunConfig config = parse_run_config(valid, "test");
    CHECK(config.samples == std::vector<std::string>{"a.csv", "b.csv"});
    CHECK(config.output_dir == "out");
    CHECK_FALSE(config.scale);
    CHECK(config.prior.preset == "unit_scale");
    CHECK(config.prior.K == 3);
    REQUIRE(config.prior.anchors.size() == 3);
    CHECK(config.prior.anchors[2](1) == 0.8);
    CHECK(config.prior.anchor_spread == 0.3);
    CHECK(config.prior.c_s.value() == 2.0);
    CHECK(config.prior.lambda.value() == std::vector<double>{0.2, 0.2, 0.2});
    CHECK(config.prior.nu_min.value() == 6);
    CHECK(config.prior.outlier_weight.value() == 2.5);
    CHECK_FALSE(config.prior.outlier_from_data);
    CHECK(config.mcmc.burn_in == 100);
    CHECK(config.mcmc.production == 400);
    CHECK(config.mcmc.thin == 2);
    CHECK_FALSE(config.mcmc.rj_enabled);
    CHECK(config.mcmc.nu_proposal_halfwidth == 3);
    CHECK(config.mcmc.activation_threshold == 0.02);
    CHECK(config.mcmc.seed == 99);
    CHECK(config.mcmc.workers == 4);
    CHECK(config.mcmc.init == McmcConfig::Init::prior_mean);
    CHECK(config.mcmc.predictive_sample_ids == std::vector<int>{0, 1});
    CHECK(config.mcmc.predictive_pooled);
    CHECK(config.merge.d1 == 0.15);
    CHECK(config.merge.d2 == 0.9);
    CHECK(config.merge.dip_alpha == 0.01);
    CHECK(config.merge.dip_bootstrap == 500);
    CHECK(config.merge.project_axes);
    CHECK_FALSE(config.merge.project_fisher);
    CHECK(config.merge.hard_assignments);
    CHECK(config.merge.seed == 12);
  }

  SUBCASE("defaults fill everything optional") {
    const RunConfig config = parse_run_config(
        R"({"samples": ["a.csv"], "prior": {"preset": "immuno_k17"}})", "test");
    CHECK(config.output_dir == ".");
    CHECK(config.scale);
    CHECK(config.mcmc.production == 1);
    CHECK(config.merge.d1 == 0.2);
    CHECK(config.prior.outlier_from_data);
    CHECK_FALSE(config.prior.c_s.has_value());
  }

  SUBCASE("unknown keys fail fast at every level") {
    CHECK_THROWS_WITH_AS(
        (void)parse_run_config(
            R"({"samples": ["a"], "prior": {"K": 1}, "typo": 1})", "test"),
        doctest::Contains("typo"), ConfigError);
    const std::string nested = thrown_message<ConfigError>([&] {
      (void)parse_run_config(
          R"({"samples": ["a"], "prior": {"K": 1, "anchor": []}})", "test");
    });
    CHECK(contains(nested, "anchor"));
    CHECK(contains(nested, "prior"));
    CHECK_THROWS_WITH_AS(
        (void)parse_run_config(
            R"({"samples": ["a"], "prior": {"K": 1}, "mcmc": {"burnin": 5}})",
            "test"),
        doctest::Contains("burnin"), ConfigError);
    CHECK_THROWS_WITH_AS(
        (void)parse_run_config(
            R"({"samples": ["a"], "prior": {"K": 1}, "merge": {"dip": 0.1}})",
            "test"),
        doctest::Contains("dip"), ConfigError);
  }

  SUBCASE("shape and type problems are config errors") {
    CHECK_THROWS_AS((void)parse_run_config("{not json", "test"), ConfigError);
    CHECK_THROWS_WITH_AS((void)parse_run_config(R"({"prior": {"K": 1}})", "test"),
                         doctest::Contains("samples"), ConfigError);
    CHECK_THROWS_AS(
        (void)parse_run_config(R"({"samples": [], "prior": {"K": 1}})", "test"),
        ConfigError);
    CHECK_THROWS_AS(
        (void)parse_run_config(
            R"({"samples": "a.csv", "prior": {"K": 1}})", "test"),
        ConfigError);
    CHECK_THROWS_AS(
        (void)parse_run_config(
            R"({"samples": ["a"], "prior": {"K": 1.5}})", "test"),
        ConfigError);
    CHECK_THROWS_AS(
        (void)parse_run_config(
            R"({"samples": ["a"], "prior": {"K": 1}, "scale": "yes"})", "test"),
        ConfigError);
    // Sampler limits are enforced on parse.
    CHECK_THROWS_AS(
        (void)parse_run_config(
            R"({"samples": ["a"], "prior": {"K": 1}, "mcmc": {"production": 0}})",
            "test"),
        ConfigError);
  }

  SUBCASE("referenced sample files must exist") {
    const fs::path dir = scratch_dir("config_paths");
    write_file(dir / "present.csv", "m\n1\n");
    write_file(dir / "run.json",
               R"({"samples": [")" + (dir / "present.csv").string() +
                   R"(", ")" + (dir / "absent.csv").string() +
                   R"("], "prior": {"K": 1}})");
    CHECK_THROWS_WITH_AS((void)load_run_config((dir / "run.json").string()),
                         doctest::Contains("absent.csv"), ConfigError);
  }
}

TEST_CASE("prior presets resolve against the marker names") {
  // Scrambled marker order: the preset must key on names, not positions.
  Dataset data = random_dataset(2, 80, 4, 17);
  data.marker_names = {"CD8", "CD4", "CD19", "CD3"};

  SUBCASE("immuno preset pins the five named phenotypes") {
    PriorConfig config;
    config.preset = "immuno_k17";
    const PriorSpec prior = resolve_prior(config, data);
    CHECK(prior.K == 17);
    CHECK(prior.d == 4);
    REQUIRE(prior.t.size() == 17);
    // helper_t: CD4+ CD8- CD3+ CD19-.
    CHECK(prior.t[0](1) == 0.8);
    CHECK(prior.t[0](0) == 0.1);
    CHECK(prior.t[0](3) == 0.8);
    CHECK(prior.t[0](2) == 0.1);
    CHECK(prior.S[0].matrix()(0, 0) == doctest::Approx(0.0225));
    // cytotoxic_t: CD4- CD8+.
    CHECK(prior.t[1](0) == 0.8);
    CHECK(prior.t[1](1) == 0.1);
    // b: CD3- CD19+ with CD4/CD8 left diffuse.
    CHECK(prior.t[3](2) == 0.8);
    CHECK(prior.t[3](3) == 0.1);
    CHECK(prior.t[3](0) == 0.5);
    CHECK(prior.S[3].matrix()(0, 0) == doctest::Approx(0.25));
    CHECK(prior.S[3].matrix()(2, 2) == doctest::Approx(0.0225));
    // nk: CD3- CD19-.
    CHECK(prior.t[4](2) == 0.1);
    CHECK(prior.t[4](3) == 0.1);
    // The 12 extras stay non-informative.
    for (int k = 5; k < 17; ++k) {
      CHECK(prior.t[k] == Vector::Constant(4, 0.5));
      CHECK(prior.S[k].matrix()(1, 1) == doctest::Approx(0.25));
    }
    // Outlier centered on the pooled data by default.
    CHECK(bitwise_equal(prior.outlier_mean, data.pooled_mean()));
  }

  SUBCASE("missing panel markers are named") {
    Dataset renamed = data;
    renamed.marker_names[2] = "CD20";
    PriorConfig config;
    config.preset = "immuno_k17";
    CHECK_THROWS_WITH_AS((void)resolve_prior(config, renamed),
                         doctest::Contains("CD19"), ConfigError);
  }

  SUBCASE("preset constraints are enforced") {
    PriorConfig config;
    config.preset = "immuno_k17";
    config.K = 5;
    CHECK_THROWS_AS((void)resolve_prior(config, data), ConfigError);
    config.K = 0;
    config.anchors = {Vector::Constant(4, 0.5)};
    CHECK_THROWS_AS((void)resolve_prior(config, data), ConfigError);
    PriorConfig plain;  // unit_scale without K
    CHECK_THROWS_AS((void)resolve_prior(plain, data), ConfigError);
    PriorConfig unknown;
    unknown.preset = "mystery";
    unknown.K = 2;
    CHECK_THROWS_WITH_AS((void)resolve_prior(unknown, data),
                         doctest::Contains("mystery"), ConfigError);
  }

  SUBCASE("overrides land in the spec") {
    PriorConfig config;
    config.K = 2;
    config.c_s = 2.5;
    config.nu_min = 9;
    config.outlier_weight = 3.0;
    config.lambda = std::vector<double>{0.4, 0.6};
    config.n_theta = 8.0;
    config.n_psi = 7.0;
    config.outlier_from_data = false;
    const PriorSpec prior = resolve_prior(config, data);
    CHECK(prior.c_s == 2.5);
    CHECK(prior.nu_min == 9);
    CHECK(prior.a(0) == 3.0);
    CHECK(prior.lambda == std::vector<double>{0.4, 0.6});
    CHECK(prior.n_theta == 8.0);
    CHECK(prior.n_psi == 7.0);
    CHECK(prior.outlier_mean == Vector::Constant(4, 0.5));

    config.lambda = std::vector<double>{0.4};
    CHECK_THROWS_WITH_AS((void)resolve_prior(config, data),
                         doctest::Contains("lambda"), ConfigError);
  }
}

#ifdef HIERMIX_CLI_PATH
namespace {

int run_cli(const std::string& args) {
  const std::string command =
      std::string(HIERMIX_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli pipeline runs end to end with reproducible traces") {
  const fs::path dir = scratch_dir("cli");
  const std::string generator = R"({
    "J": 3, "d": 2, "K": 2,
    "n_cells": [80, 80, 80],
    "theta": [[0.3, 0.3], [0.7, 0.7]],
    "sigma_theta": [[[0.001, 0.0], [0.0, 0.001]], [[0.001, 0.0], [0.0, 0.001]]],
    "psi": [[[0.05, 0.0], [0.0, 0.05]], [[0.05, 0.0], [0.0, 0.05]]],
    "nu": [25, 25],
    "activation": [[1, 1], [1, 1], [1, 1]],
    "base_weights": [0.02, 0.55, 0.43],
    "outlier_mean": [0.5, 0.5],
    "outlier_cov": [[0.25, 0.0], [0.0, 0.25]],
    "seed": 13
  })";
  write_file(dir / "generator.json", generator);
  REQUIRE(run_cli("simulate --spec " + (dir / "generator.json").string() +
                  " --out " + (dir / "sim").string()) == 0);
  REQUIRE(fs::exists(dir / "sim/samples/sim0.csv"));
  REQUIRE(fs::exists(dir / "sim/truth/truth_theta.csv"));

  auto config_text = [&](const std::string& out) {
    return std::string(R"({
      "samples": [")") +
           (dir / "sim/samples/sim0.csv").string() + R"(", ")" +
           (dir / "sim/samples/sim1.csv").string() + R"(", ")" +
           (dir / "sim/samples/sim2.csv").string() + R"("],
      "output_dir": ")" +
           (dir / out).string() + R"(",
      "scale": true,
      "prior": {"preset": "unit_scale", "K": 2},
      "mcmc": {"burn_in": 30, "production": 60, "seed": 9, "workers": 2},
      "merge": {"dip_bootstrap": 200}
    })";
  };
  write_file(dir / "run_a.json", config_text("run_a"));
  write_file(dir / "run_b.json", config_text("run_b"));
  REQUIRE(run_cli("fit --config " + (dir / "run_a.json").string()) == 0);
  REQUIRE(run_cli("fit --config " + (dir / "run_b.json").string()) == 0);

  SUBCASE("same seed gives byte-identical traces") {
    for (const char* name :
         {"theta.csv", "mu.csv", "sigma.csv", "pi.csv", "z.csv", "nu.csv",
          "log_posterior.csv", "assignment_counts.csv", "pi_sums.csv"}) {
      CAPTURE(name);
      CHECK(read_file(dir / "run_a/trace" / name) ==
            read_file(dir / "run_b/trace" / name));
    }
  }

  SUBCASE("manifest records the command, config hash, and seed") {
    const std::string manifest = read_file(dir / "run_a/manifest.json");
    CHECK(manifest.find("\"command\"") != std::string::npos);
    CHECK(manifest.find("run_a.json") != std::string::npos);
    CHECK(manifest.find("\"hash\"") != std::string::npos);
    CHECK(manifest.find("\"seed\": 9") != std::string::npos);
    CHECK(manifest.find("\"version\"") != std::string::npos);
    CHECK(manifest.find("\"acceptance_rates\"") != std::string::npos);
    CHECK(fs::exists(dir / "run_a/scaling.csv"));
  }

  SUBCASE("downstream commands consume the fit") {
    CHECK(run_cli("summarize --trace " + (dir / "run_a/trace").string() +
                  " --truth " + (dir / "sim/truth").string() + " --out " +
                  (dir / "run_a/summary").string()) == 0);
    CHECK(fs::exists(dir / "run_a/summary/theta.csv"));
    CHECK(fs::exists(dir / "run_a/summary/recovery.csv"));

    CHECK(run_cli("merge --trace " + (dir / "run_a/trace").string() +
                  " --config " + (dir / "run_a.json").string()) == 0);
    CHECK(fs::exists(dir / "run_a/merge.json"));
    CHECK(fs::exists(dir / "run_a/soft_weights.csv"));
    CHECK(fs::exists(dir / "run_a/population_quantiles.csv"));
    REQUIRE(fs::exists(dir / "run_a/population_sizes.csv"));

    CHECK(run_cli("pca --populations " +
                  (dir / "run_a/population_sizes.csv").string() + " --out " +
                  (dir / "run_a/pca").string()) == 0);
    CHECK(fs::exists(dir / "run_a/pca/scores.csv"));
    CHECK(fs::exists(dir / "run_a/pca/variance.csv"));

    CHECK(run_cli("em-baseline --sample " +
                  (dir / "sim/samples/sim0.csv").string() + " --k 2 --out " +
                  (dir / "run_a/em").string()) == 0);
    CHECK(fs::exists(dir / "run_a/em/em_means.csv"));
  }

  SUBCASE("failures exit with the documented codes") {
    write_file(dir / "bad.json", R"({"samples": ["x.csv"], "prior": {"K": 1}})");
    CHECK(run_cli("fit --config " + (dir / "bad.json").string()) == 2);
    write_file(dir / "unknown_key.json",
               config_text("run_c").insert(1, R"("extra": 1,)"));
    CHECK(run_cli("fit --config " + (dir / "unknown_key.json").string()) == 2);
    CHECK(run_cli("summarize --trace " + (dir / "missing").string()) == 3);
    CHECK(run_cli("fit") == 2);             // missing required option
    CHECK(run_cli("") == 2);                // missing subcommand
    CHECK(run_cli("--help") == 0);
  }
}

TEST_CASE("cli sec31 preset emits the scaled-down study layout") {
  const fs::path dir = scratch_dir("sec31");
  REQUIRE(run_cli("simulate --preset sec31 --scale 0.1 --out " +
                  dir.string()) == 0);
  int files = 0;
  for (const auto& entry : fs::directory_iterator(dir / "samples")) {
    (void)entry;
    ++files;
  }
  CHECK(files == 80);
  const CsvTable one = read_csv((dir / "samples/sim0.csv").string());
  CHECK(one.rows.size() == 1500);
  CHECK(one.header.size() == 3);
}
#endif  // HIERMIX_CLI_PATH

}  // TEST_SUITE("io")
