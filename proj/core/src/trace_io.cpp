#include "hiermix/trace_io.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string_view>

#include <nlohmann/json.hpp>

#include "hiermix/csv.hpp"
#include "hiermix/errors.hpp"

namespace hiermix {

namespace {

using nlohmann::json;

std::string path_under(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open file for writing");
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!out) throw DataError(path + ": write failed");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
}

long long to_int(std::string_view field, const std::string& context) {
  long long value = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DataError(context + ": cannot parse \"" + std::string(field) +
                    "\" as an integer");
  }
  return value;
}

double to_double(std::string_view field, const std::string& context) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DataError(context + ": cannot parse \"" + std::string(field) +
                    "\" as a real");
  }
  return value;
}

/// Streams a numeric long-format CSV: checks the exact header, splits each
/// line on commas, and hands the fields to `fn`.  Returns the data row
/// count.  Quoting is not interpreted; these files never need it.
template <typename Fn>
std::int64_t for_each_row(const std::string& path, const std::string& header,
                          std::size_t n_fields, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) {
    throw DataError(path + ": expected header \"" + header + "\", found \"" +
                    line + "\"");
  }
  std::vector<std::string_view> fields;
  std::int64_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fields.clear();
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.emplace_back(line.data() + start, line.size() - start);
        break;
      }
      fields.emplace_back(line.data() + start, comma - start);
      start = comma + 1;
    }
    if (fields.size() != n_fields) {
      throw DataError(path + ": row " + std::to_string(rows + 2) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(n_fields));
    }
    fn(fields);
    ++rows;
  }
  return rows;
}

void check_rows(const std::string& path, std::int64_t actual,
                std::int64_t expected) {
  if (actual != expected) {
    throw DataError(path + ": has " + std::to_string(actual) +
                    " data rows, expected " + std::to_string(expected));
  }
}

long long checked_index(long long value, long long size,
                        const std::string& context) {
  if (value < 0 || value >= size) {
    throw DataError(context + ": index " + std::to_string(value) +
                    " out of range [0, " + std::to_string(size) + ")");
  }
  return value;
}

json counters_to_json(const SamplerCounters& c) {
  return json{{"nu_proposals", c.nu_proposals},
              {"nu_accepts", c.nu_accepts},
              {"birth_proposals", c.birth_proposals},
              {"birth_accepts", c.birth_accepts},
              {"death_proposals", c.death_proposals},
              {"death_accepts", c.death_accepts},
              {"param_draw_failures", c.param_draw_failures}};
}

SamplerCounters counters_from_json(const json& j) {
  SamplerCounters c;
  c.nu_proposals = j.at("nu_proposals").get<std::int64_t>();
  c.nu_accepts = j.at("nu_accepts").get<std::int64_t>();
  c.birth_proposals = j.at("birth_proposals").get<std::int64_t>();
  c.birth_accepts = j.at("birth_accepts").get<std::int64_t>();
  c.death_proposals = j.at("death_proposals").get<std::int64_t>();
  c.death_accepts = j.at("death_accepts").get<std::int64_t>();
  c.param_draw_failures = j.at("param_draw_failures").get<std::int64_t>();
  return c;
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char byte : bytes) {
    hash ^= byte;
    hash *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

void save_trace(const Trace& trace, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const int n_draws = trace.n_draws();

  json meta{{"format_version", 1},
            {"k", trace.K},
            {"j", trace.J},
            {"d", trace.d},
            {"production", trace.production},
            {"thin", trace.thin},
            {"n_draws", n_draws},
            {"n_cells", trace.n_cells},
            {"predictive_labels", trace.predictive_labels},
            {"counters", counters_to_json(trace.counters)},
            {"jitter_events", trace.jitter_events},
            {"label_switch_pairs", trace.label_switch_pairs}};
  write_text(path_under(dir, "meta.json"), meta.dump(2) + "\n");

  {
    std::ofstream out = open_out(path_under(dir, "theta.csv"));
    out << "iteration,k,coord,value\n";
    for (int t = 0; t < n_draws; ++t) {
      for (int k = 0; k < trace.K; ++k) {
        for (int c = 0; c < trace.d; ++c) {
          out << t << ',' << k + 1 << ',' << c << ','
              << format_double(trace.theta[t][k](c)) << '\n';
        }
      }
    }
  }
  auto write_component_matrices =
      [&](const std::string& name,
          const std::vector<std::vector<Matrix>>& values) {
        std::ofstream out = open_out(path_under(dir, name));
        out << "iteration,k,row,col,value\n";
        for (int t = 0; t < n_draws; ++t) {
          for (int k = 0; k < trace.K; ++k) {
            for (int r = 0; r < trace.d; ++r) {
              for (int c = 0; c < trace.d; ++c) {
                out << t << ',' << k + 1 << ',' << r << ',' << c << ','
                    << format_double(values[t][k](r, c)) << '\n';
              }
            }
          }
        }
      };
  write_component_matrices("sigma_theta.csv", trace.sigma_theta);
  write_component_matrices("psi.csv", trace.psi);
  {
    std::ofstream out = open_out(path_under(dir, "nu.csv"));
    out << "iteration,k,value\n";
    for (int t = 0; t < n_draws; ++t) {
      for (int k = 0; k < trace.K; ++k) {
        out << t << ',' << k + 1 << ',' << trace.nu[t][k] << '\n';
      }
    }
  }
  {
    std::ofstream out = open_out(path_under(dir, "mu.csv"));
    out << "iteration,j,k,coord,value\n";
    for (int t = 0; t < n_draws; ++t) {
      for (int j = 0; j < trace.J; ++j) {
        for (int k = 0; k < trace.K; ++k) {
          for (int c = 0; c < trace.d; ++c) {
            out << t << ',' << j << ',' << k + 1 << ',' << c << ','
                << format_double(trace.mu[t][j][k](c)) << '\n';
          }
        }
      }
    }
  }
  {
    std::ofstream out = open_out(path_under(dir, "sigma.csv"));
    out << "iteration,j,k,row,col,value\n";
    for (int t = 0; t < n_draws; ++t) {
      for (int j = 0; j < trace.J; ++j) {
        for (int k = 0; k < trace.K; ++k) {
          for (int r = 0; r < trace.d; ++r) {
            for (int c = 0; c < trace.d; ++c) {
              out << t << ',' << j << ',' << k + 1 << ',' << r << ',' << c
                  << ',' << format_double(trace.sigma[t][j][k](r, c)) << '\n';
            }
          }
        }
      }
    }
  }
  {
    std::ofstream out = open_out(path_under(dir, "pi.csv"));
    out << "iteration,j,k,value\n";
    for (int t = 0; t < n_draws; ++t) {
      for (int j = 0; j < trace.J; ++j) {
        for (int k = 0; k <= trace.K; ++k) {
          out << t << ',' << j << ',' << k << ','
              << format_double(trace.pi[t][j](k)) << '\n';
        }
      }
    }
  }
  {
    std::ofstream out = open_out(path_under(dir, "z.csv"));
    out << "iteration,j,k,value\n";
    for (int t = 0; t < n_draws; ++t) {
      for (int j = 0; j < trace.J; ++j) {
        for (int k = 0; k < trace.K; ++k) {
          out << t << ',' << j << ',' << k + 1 << ','
              << static_cast<int>(trace.z[t][j][k]) << '\n';
        }
      }
    }
  }
  {
    std::ofstream out = open_out(path_under(dir, "log_posterior.csv"));
    out << "iteration,value\n";
    for (int t = 0; t < n_draws; ++t) {
      out << t << ',' << format_double(trace.log_posterior[t]) << '\n';
    }
  }
  {
    std::ofstream out = open_out(path_under(dir, "predictive.csv"));
    out << "iteration,slot,coord,value\n";
    for (std::size_t t = 0; t < trace.predictive.size(); ++t) {
      for (std::size_t s = 0; s < trace.predictive[t].size(); ++s) {
        for (int c = 0; c < trace.d; ++c) {
          out << t << ',' << s << ',' << c << ','
              << format_double(trace.predictive[t][s](c)) << '\n';
        }
      }
    }
  }
  {
    std::ofstream out = open_out(path_under(dir, "activation_counts.csv"));
    out << "j,k,count\n";
    for (std::size_t j = 0; j < trace.activation_counts.size(); ++j) {
      for (int k = 0; k < trace.K; ++k) {
        out << j << ',' << k + 1 << ',' << trace.activation_counts[j][k]
            << '\n';
      }
    }
  }
  {
    std::ofstream out = open_out(path_under(dir, "assignment_counts.csv"));
    out << "j,cell,k,count\n";
    for (std::size_t j = 0; j < trace.assignment_counts.size(); ++j) {
      const Matrix& counts = trace.assignment_counts[j];
      for (Eigen::Index i = 0; i < counts.rows(); ++i) {
        for (Eigen::Index k = 0; k < counts.cols(); ++k) {
          out << j << ',' << i << ',' << k << ','
              << format_double(counts(i, k)) << '\n';
        }
      }
    }
  }
  {
    std::ofstream out = open_out(path_under(dir, "pi_sums.csv"));
    out << "j,k,value\n";
    for (std::size_t j = 0; j < trace.pi_sums.size(); ++j) {
      for (int k = 0; k <= trace.K; ++k) {
        out << j << ',' << k << ',' << format_double(trace.pi_sums[j](k))
            << '\n';
      }
    }
  }
}

Trace load_trace(const std::string& dir) {
  const json meta = parse_json_file(path_under(dir, "meta.json"));
  Trace trace;
  try {
    trace.K = meta.at("k").get<int>();
    trace.J = meta.at("j").get<int>();
    trace.d = meta.at("d").get<int>();
    trace.production = meta.at("production").get<int>();
    trace.thin = meta.at("thin").get<int>();
    trace.n_cells = meta.at("n_cells").get<std::vector<int>>();
    trace.predictive_labels =
        meta.at("predictive_labels").get<std::vector<std::string>>();
    trace.counters = counters_from_json(meta.at("counters"));
    trace.jitter_events = meta.at("jitter_events").get<std::int64_t>();
    trace.label_switch_pairs = meta.at("label_switch_pairs").get<int>();
  } catch (const json::exception& e) {
    throw DataError(path_under(dir, "meta.json") + ": " + e.what());
  }
  const int n_draws = meta.at("n_draws").get<int>();
  const int K = trace.K;
  const int J = trace.J;
  const int d = trace.d;
  if (K < 1 || J < 1 || d < 1 || n_draws < 0 ||
      static_cast<int>(trace.n_cells.size()) != J) {
    throw DataError(path_under(dir, "meta.json") + ": inconsistent shapes");
  }

  trace.theta.assign(n_draws, std::vector<Vector>(K, Vector::Zero(d)));
  trace.sigma_theta.assign(n_draws, std::vector<Matrix>(K, Matrix::Zero(d, d)));
  trace.psi.assign(n_draws, std::vector<Matrix>(K, Matrix::Zero(d, d)));
  trace.nu.assign(n_draws, std::vector<int>(K, 0));
  trace.mu.assign(n_draws, std::vector<std::vector<Vector>>(
                               J, std::vector<Vector>(K, Vector::Zero(d))));
  trace.sigma.assign(n_draws,
                     std::vector<std::vector<Matrix>>(
                         J, std::vector<Matrix>(K, Matrix::Zero(d, d))));
  trace.pi.assign(n_draws, std::vector<Vector>(J, Vector::Zero(K + 1)));
  trace.z.assign(n_draws, std::vector<std::vector<std::uint8_t>>(
                              J, std::vector<std::uint8_t>(K, 0)));
  trace.log_posterior.assign(n_draws, 0.0);
  trace.predictive.assign(
      n_draws,
      std::vector<Vector>(trace.predictive_labels.size(), Vector::Zero(d)));

  const std::int64_t n64 = n_draws;
  std::string path = path_under(dir, "theta.csv");
  std::int64_t rows = for_each_row(
      path, "iteration,k,coord,value", 4, [&](const auto& f) {
        const auto t = checked_index(to_int(f[0], path), n_draws, path);
        const auto k = checked_index(to_int(f[1], path) - 1, K, path);
        const auto c = checked_index(to_int(f[2], path), d, path);
        trace.theta[t][k](c) = to_double(f[3], path);
      });
  check_rows(path, rows, n64 * K * d);

  auto read_component_matrices = [&](const std::string& name,
                                     std::vector<std::vector<Matrix>>* out) {
    const std::string file = path_under(dir, name);
    const std::int64_t got = for_each_row(
        file, "iteration,k,row,col,value", 5, [&](const auto& f) {
          const auto t = checked_index(to_int(f[0], file), n_draws, file);
          const auto k = checked_index(to_int(f[1], file) - 1, K, file);
          const auto r = checked_index(to_int(f[2], file), d, file);
          const auto c = checked_index(to_int(f[3], file), d, file);
          (*out)[t][k](r, c) = to_double(f[4], file);
        });
    check_rows(file, got, n64 * K * d * d);
  };
  read_component_matrices("sigma_theta.csv", &trace.sigma_theta);
  read_component_matrices("psi.csv", &trace.psi);

  path = path_under(dir, "nu.csv");
  rows = for_each_row(path, "iteration,k,value", 3, [&](const auto& f) {
    const auto t = checked_index(to_int(f[0], path), n_draws, path);
    const auto k = checked_index(to_int(f[1], path) - 1, K, path);
    trace.nu[t][k] = static_cast<int>(to_int(f[2], path));
  });
  check_rows(path, rows, n64 * K);

  path = path_under(dir, "mu.csv");
  rows = for_each_row(path, "iteration,j,k,coord,value", 5, [&](const auto& f) {
    const auto t = checked_index(to_int(f[0], path), n_draws, path);
    const auto j = checked_index(to_int(f[1], path), J, path);
    const auto k = checked_index(to_int(f[2], path) - 1, K, path);
    const auto c = checked_index(to_int(f[3], path), d, path);
    trace.mu[t][j][k](c) = to_double(f[4], path);
  });
  check_rows(path, rows, n64 * J * K * d);

  path = path_under(dir, "sigma.csv");
  rows = for_each_row(
      path, "iteration,j,k,row,col,value", 6, [&](const auto& f) {
        const auto t = checked_index(to_int(f[0], path), n_draws, path);
        const auto j = checked_index(to_int(f[1], path), J, path);
        const auto k = checked_index(to_int(f[2], path) - 1, K, path);
        const auto r = checked_index(to_int(f[3], path), d, path);
        const auto c = checked_index(to_int(f[4], path), d, path);
        trace.sigma[t][j][k](r, c) = to_double(f[5], path);
      });
  check_rows(path, rows, n64 * J * K * d * d);

  path = path_under(dir, "pi.csv");
  rows = for_each_row(path, "iteration,j,k,value", 4, [&](const auto& f) {
    const auto t = checked_index(to_int(f[0], path), n_draws, path);
    const auto j = checked_index(to_int(f[1], path), J, path);
    const auto k = checked_index(to_int(f[2], path), K + 1, path);
    trace.pi[t][j](k) = to_double(f[3], path);
  });
  check_rows(path, rows, n64 * J * (K + 1));

  path = path_under(dir, "z.csv");
  rows = for_each_row(path, "iteration,j,k,value", 4, [&](const auto& f) {
    const auto t = checked_index(to_int(f[0], path), n_draws, path);
    const auto j = checked_index(to_int(f[1], path), J, path);
    const auto k = checked_index(to_int(f[2], path) - 1, K, path);
    const long long value = to_int(f[3], path);
    if (value != 0 && value != 1) {
      throw DataError(path + ": activation flag must be 0 or 1");
    }
    trace.z[t][j][k] = static_cast<std::uint8_t>(value);
  });
  check_rows(path, rows, n64 * J * K);

  path = path_under(dir, "log_posterior.csv");
  rows = for_each_row(path, "iteration,value", 2, [&](const auto& f) {
    const auto t = checked_index(to_int(f[0], path), n_draws, path);
    trace.log_posterior[t] = to_double(f[1], path);
  });
  check_rows(path, rows, n64);

  path = path_under(dir, "predictive.csv");
  const auto n_slots = static_cast<long long>(trace.predictive_labels.size());
  rows = for_each_row(path, "iteration,slot,coord,value", 4,
                      [&](const auto& f) {
                        const auto t =
                            checked_index(to_int(f[0], path), n_draws, path);
                        const auto s =
                            checked_index(to_int(f[1], path), n_slots, path);
                        const auto c = checked_index(to_int(f[2], path), d, path);
                        trace.predictive[t][s](c) = to_double(f[3], path);
                      });
  check_rows(path, rows, n64 * n_slots * d);

  // The accumulator files may be empty (hand-built traces); any content
  // must be complete.
  path = path_under(dir, "activation_counts.csv");
  rows = for_each_row(path, "j,k,count", 3, [&](const auto& f) {
    if (trace.activation_counts.empty()) {
      trace.activation_counts.assign(J, std::vector<std::int64_t>(K, 0));
    }
    const auto j = checked_index(to_int(f[0], path), J, path);
    const auto k = checked_index(to_int(f[1], path) - 1, K, path);
    trace.activation_counts[j][k] = to_int(f[2], path);
  });
  if (rows != 0) check_rows(path, rows, static_cast<std::int64_t>(J) * K);

  path = path_under(dir, "assignment_counts.csv");
  rows = for_each_row(path, "j,cell,k,count", 4, [&](const auto& f) {
    if (trace.assignment_counts.empty()) {
      for (int j = 0; j < J; ++j) {
        trace.assignment_counts.emplace_back(
            Matrix::Zero(trace.n_cells[j], K + 1));
      }
    }
    const auto j = checked_index(to_int(f[0], path), J, path);
    const auto i = checked_index(to_int(f[1], path), trace.n_cells[j], path);
    const auto k = checked_index(to_int(f[2], path), K + 1, path);
    trace.assignment_counts[j](i, k) = to_double(f[3], path);
  });
  if (rows != 0) {
    std::int64_t expected = 0;
    for (int n : trace.n_cells) expected += static_cast<std::int64_t>(n) * (K + 1);
    check_rows(path, rows, expected);
  }

  path = path_under(dir, "pi_sums.csv");
  rows = for_each_row(path, "j,k,value", 3, [&](const auto& f) {
    if (trace.pi_sums.empty()) trace.pi_sums.assign(J, Vector::Zero(K + 1));
    const auto j = checked_index(to_int(f[0], path), J, path);
    const auto k = checked_index(to_int(f[1], path), K + 1, path);
    trace.pi_sums[j](k) = to_double(f[2], path);
  });
  if (rows != 0) check_rows(path, rows, static_cast<std::int64_t>(J) * (K + 1));

  return trace;
}

void save_merge(const MergeResult& merge, const std::string& dir) {
  std::filesystem::create_directories(dir);
  json log = json::array();
  for (const MergeStep& step : merge.merge_log) {
    log.push_back(json{{"into", step.into},
                       {"from", step.from},
                       {"distance", step.distance},
                       {"criterion", step.criterion},
                       {"dip_p_values", step.dip_p_values}});
  }
  const json doc{{"partition", merge.partition},
                 {"population_ids", merge.population_ids},
                 {"merge_log", log}};
  write_text(path_under(dir, "merge.json"), doc.dump(2) + "\n");

  std::ofstream out = open_out(path_under(dir, "soft_weights.csv"));
  out << "j,cell,outlier";
  for (int id : merge.population_ids) out << ",pop_" << id;
  out << '\n';
  for (std::size_t j = 0; j < merge.soft_weights.size(); ++j) {
    const Matrix& w = merge.soft_weights[j];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      out << j << ',' << i;
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        out << ',' << format_double(w(i, c));
      }
      out << '\n';
    }
  }
}

void save_summary(const PosteriorSummary& summary, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const int K = summary.K;
  const int J = summary.J;
  const int d = summary.d;

  CsvTable theta;
  theta.header = {"k", "coord", "mean", "median", "lower", "upper"};
  for (int k = 0; k < K; ++k) {
    for (int c = 0; c < d; ++c) {
      theta.rows.push_back({std::to_string(k + 1), std::to_string(c),
                            format_double(summary.theta_mean[k](c)),
                            format_double(summary.theta_median[k](c)),
                            format_double(summary.theta_lower[k](c)),
                            format_double(summary.theta_upper[k](c))});
    }
  }
  write_csv(path_under(dir, "theta.csv"), theta);

  CsvTable latent;
  latent.header = {"k", "row", "col", "mean", "median", "lower", "upper"};
  for (int k = 0; k < K; ++k) {
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) {
        latent.rows.push_back({std::to_string(k + 1), std::to_string(r),
                               std::to_string(c),
                               format_double(summary.latent_cov_mean[k](r, c)),
                               format_double(summary.latent_cov_median[k](r, c)),
                               format_double(summary.latent_cov_lower[k](r, c)),
                               format_double(summary.latent_cov_upper[k](r, c))});
      }
    }
  }
  write_csv(path_under(dir, "latent_cov.csv"), latent);

  CsvTable psi;
  psi.header = {"k", "row", "col", "value"};
  for (int k = 0; k < K; ++k) {
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) {
        psi.rows.push_back({std::to_string(k + 1), std::to_string(r),
                            std::to_string(c),
                            format_double(summary.psi_mean[k](r, c))});
      }
    }
  }
  write_csv(path_under(dir, "psi_mean.csv"), psi);

  CsvTable nu;
  nu.header = {"k", "value"};
  for (int k = 0; k < K; ++k) {
    nu.rows.push_back({std::to_string(k + 1), format_double(summary.nu_mean[k])});
  }
  write_csv(path_under(dir, "nu_mean.csv"), nu);

  CsvTable mu;
  mu.header = {"j", "k", "coord", "value"};
  for (int j = 0; j < J; ++j) {
    for (int k = 0; k < K; ++k) {
      for (int c = 0; c < d; ++c) {
        mu.rows.push_back({std::to_string(j), std::to_string(k + 1),
                           std::to_string(c),
                           format_double(summary.mu_mean[j][k](c))});
      }
    }
  }
  write_csv(path_under(dir, "mu_mean.csv"), mu);

  CsvTable sigma;
  sigma.header = {"j", "k", "row", "col", "value"};
  for (int j = 0; j < J; ++j) {
    for (int k = 0; k < K; ++k) {
      for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
          sigma.rows.push_back({std::to_string(j), std::to_string(k + 1),
                                std::to_string(r), std::to_string(c),
                                format_double(summary.sigma_mean[j][k](r, c))});
        }
      }
    }
  }
  write_csv(path_under(dir, "sigma_mean.csv"), sigma);

  CsvTable pi;
  pi.header = {"j", "k", "value"};
  for (int j = 0; j < J; ++j) {
    for (int k = 0; k <= K; ++k) {
      pi.rows.push_back({std::to_string(j), std::to_string(k),
                         format_double(summary.pi_mean[j](k))});
    }
  }
  write_csv(path_under(dir, "pi_mean.csv"), pi);

  CsvTable activation;
  activation.header = {"j", "k", "value"};
  for (int j = 0; j < J; ++j) {
    for (int k = 0; k < K; ++k) {
      activation.rows.push_back(
          {std::to_string(j), std::to_string(k + 1),
           format_double(summary.activation_probability[j](k))});
    }
  }
  write_csv(path_under(dir, "activation.csv"), activation);
}

void save_recovery(const std::vector<RecoveryRow>& rows,
                   const std::string& path) {
  CsvTable table;
  table.header = {"parameter", "component", "row",   "col",
                  "truth",     "median",    "lower", "upper", "covered"};
  for (const RecoveryRow& row : rows) {
    table.rows.push_back({row.parameter, std::to_string(row.component),
                          std::to_string(row.row), std::to_string(row.col),
                          format_double(row.truth), format_double(row.median),
                          format_double(row.lower), format_double(row.upper),
                          row.covered ? "1" : "0"});
  }
  write_csv(path, table);
}

void save_ground_truth(const GroundTruth& truth, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const int K = static_cast<int>(truth.theta.size());
  const int J = static_cast<int>(truth.mu.size());
  const int d = K > 0 ? static_cast<int>(truth.theta[0].size()) : 0;
  std::vector<int> n_cells;
  for (const auto& a : truth.assignments) {
    n_cells.push_back(static_cast<int>(a.size()));
  }
  const json meta{
      {"k", K}, {"j", J}, {"d", d}, {"n_cells", n_cells}};
  write_text(path_under(dir, "truth_meta.json"), meta.dump(2) + "\n");

  {
    std::ofstream out = open_out(path_under(dir, "truth_theta.csv"));
    out << "k,coord,value\n";
    for (int k = 0; k < K; ++k) {
      for (int c = 0; c < d; ++c) {
        out << k + 1 << ',' << c << ',' << format_double(truth.theta[k](c))
            << '\n';
      }
    }
  }
  auto write_matrices = [&](const std::string& name,
                            const std::vector<Matrix>& values) {
    std::ofstream out = open_out(path_under(dir, name));
    out << "k,row,col,value\n";
    for (int k = 0; k < K; ++k) {
      for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
          out << k + 1 << ',' << r << ',' << c << ','
              << format_double(values[k](r, c)) << '\n';
        }
      }
    }
  };
  write_matrices("truth_sigma_theta.csv", truth.sigma_theta);
  write_matrices("truth_psi.csv", truth.psi);
  {
    std::ofstream out = open_out(path_under(dir, "truth_nu.csv"));
    out << "k,value\n";
    for (int k = 0; k < K; ++k) out << k + 1 << ',' << truth.nu[k] << '\n';
  }
  {
    std::ofstream out = open_out(path_under(dir, "truth_mu.csv"));
    out << "j,k,coord,value\n";
    for (int j = 0; j < J; ++j) {
      for (int k = 0; k < K; ++k) {
        for (int c = 0; c < d; ++c) {
          out << j << ',' << k + 1 << ',' << c << ','
              << format_double(truth.mu[j][k](c)) << '\n';
        }
      }
    }
  }
  {
    std::ofstream out = open_out(path_under(dir, "truth_sigma.csv"));
    out << "j,k,row,col,value\n";
    for (int j = 0; j < J; ++j) {
      for (int k = 0; k < K; ++k) {
        for (int r = 0; r < d; ++r) {
          for (int c = 0; c < d; ++c) {
            out << j << ',' << k + 1 << ',' << r << ',' << c << ','
                << format_double(truth.sigma[j][k](r, c)) << '\n';
          }
        }
      }
    }
  }
  {
    std::ofstream out = open_out(path_under(dir, "truth_pi.csv"));
    out << "j,k,value\n";
    for (int j = 0; j < J; ++j) {
      for (int k = 0; k <= K; ++k) {
        out << j << ',' << k << ',' << format_double(truth.pi[j](k)) << '\n';
      }
    }
  }
  {
    std::ofstream out = open_out(path_under(dir, "truth_activation.csv"));
    out << "j,k,value\n";
    for (int j = 0; j < J; ++j) {
      for (int k = 0; k < K; ++k) {
        out << j << ',' << k + 1 << ','
            << static_cast<int>(truth.activation[j][k]) << '\n';
      }
    }
  }
  {
    std::ofstream out = open_out(path_under(dir, "truth_assignments.csv"));
    out << "j,cell,component\n";
    for (int j = 0; j < J; ++j) {
      for (std::size_t i = 0; i < truth.assignments[j].size(); ++i) {
        out << j << ',' << i << ',' << truth.assignments[j][i] << '\n';
      }
    }
  }
  {
    std::ofstream out = open_out(path_under(dir, "truth_outlier_mean.csv"));
    out << "coord,value\n";
    for (int c = 0; c < d; ++c) {
      out << c << ',' << format_double(truth.outlier_mean(c)) << '\n';
    }
  }
  {
    std::ofstream out = open_out(path_under(dir, "truth_outlier_cov.csv"));
    out << "row,col,value\n";
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) {
        out << r << ',' << c << ',' << format_double(truth.outlier_cov(r, c))
            << '\n';
      }
    }
  }
}

GroundTruth load_ground_truth(const std::string& dir) {
  const json meta = parse_json_file(path_under(dir, "truth_meta.json"));
  int K = 0, J = 0, d = 0;
  std::vector<int> n_cells;
  try {
    K = meta.at("k").get<int>();
    J = meta.at("j").get<int>();
    d = meta.at("d").get<int>();
    n_cells = meta.at("n_cells").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw DataError(path_under(dir, "truth_meta.json") + ": " + e.what());
  }
  if (K < 1 || J < 1 || d < 1 || static_cast<int>(n_cells.size()) != J) {
    throw DataError(path_under(dir, "truth_meta.json") +
                    ": inconsistent shapes");
  }

  GroundTruth truth;
  truth.theta.assign(K, Vector::Zero(d));
  truth.sigma_theta.assign(K, Matrix::Zero(d, d));
  truth.psi.assign(K, Matrix::Zero(d, d));
  truth.nu.assign(K, 0);
  truth.mu.assign(J, std::vector<Vector>(K, Vector::Zero(d)));
  truth.sigma.assign(J, std::vector<Matrix>(K, Matrix::Zero(d, d)));
  truth.pi.assign(J, Vector::Zero(K + 1));
  truth.activation.assign(J, std::vector<std::uint8_t>(K, 0));
  truth.assignments.resize(J);
  for (int j = 0; j < J; ++j) truth.assignments[j].assign(n_cells[j], 0);
  truth.outlier_mean = Vector::Zero(d);
  truth.outlier_cov = Matrix::Zero(d, d);

  std::string path = path_under(dir, "truth_theta.csv");
  std::int64_t rows = for_each_row(path, "k,coord,value", 3, [&](const auto& f) {
    const auto k = checked_index(to_int(f[0], path) - 1, K, path);
    const auto c = checked_index(to_int(f[1], path), d, path);
    truth.theta[k](c) = to_double(f[2], path);
  });
  check_rows(path, rows, static_cast<std::int64_t>(K) * d);

  auto read_matrices = [&](const std::string& name,
                           std::vector<Matrix>* out) {
    const std::string file = path_under(dir, name);
    const std::int64_t got =
        for_each_row(file, "k,row,col,value", 4, [&](const auto& f) {
          const auto k = checked_index(to_int(f[0], file) - 1, K, file);
          const auto r = checked_index(to_int(f[1], file), d, file);
          const auto c = checked_index(to_int(f[2], file), d, file);
          (*out)[k](r, c) = to_double(f[3], file);
        });
    check_rows(file, got, static_cast<std::int64_t>(K) * d * d);
  };
  read_matrices("truth_sigma_theta.csv", &truth.sigma_theta);
  read_matrices("truth_psi.csv", &truth.psi);

  path = path_under(dir, "truth_nu.csv");
  rows = for_each_row(path, "k,value", 2, [&](const auto& f) {
    const auto k = checked_index(to_int(f[0], path) - 1, K, path);
    truth.nu[k] = static_cast<int>(to_int(f[1], path));
  });
  check_rows(path, rows, K);

  path = path_under(dir, "truth_mu.csv");
  rows = for_each_row(path, "j,k,coord,value", 4, [&](const auto& f) {
    const auto j = checked_index(to_int(f[0], path), J, path);
    const auto k = checked_index(to_int(f[1], path) - 1, K, path);
    const auto c = checked_index(to_int(f[2], path), d, path);
    truth.mu[j][k](c) = to_double(f[3], path);
  });
  check_rows(path, rows, static_cast<std::int64_t>(J) * K * d);

  path = path_under(dir, "truth_sigma.csv");
  rows = for_each_row(path, "j,k,row,col,value", 5, [&](const auto& f) {
    const auto j = checked_index(to_int(f[0], path), J, path);
    const auto k = checked_index(to_int(f[1], path) - 1, K, path);
    const auto r = checked_index(to_int(f[2], path), d, path);
    const auto c = checked_index(to_int(f[3], path), d, path);
    truth.sigma[j][k](r, c) = to_double(f[4], path);
  });
  check_rows(path, rows, static_cast<std::int64_t>(J) * K * d * d);

  path = path_under(dir, "truth_pi.csv");
  rows = for_each_row(path, "j,k,value", 3, [&](const auto& f) {
    const auto j = checked_index(to_int(f[0], path), J, path);
    const auto k = checked_index(to_int(f[1], path), K + 1, path);
    truth.pi[j](k) = to_double(f[2], path);
  });
  check_rows(path, rows, static_cast<std::int64_t>(J) * (K + 1));

  path = path_under(dir, "truth_activation.csv");
  rows = for_each_row(path, "j,k,value", 3, [&](const auto& f) {
    const auto j = checked_index(to_int(f[0], path), J, path);
    const auto k = checked_index(to_int(f[1], path) - 1, K, path);
    const long long value = to_int(f[2], path);
    if (value != 0 && value != 1) {
      throw DataError(path + ": activation flag must be 0 or 1");
    }
    truth.activation[j][k] = static_cast<std::uint8_t>(value);
  });
  check_rows(path, rows, static_cast<std::int64_t>(J) * K);

  path = path_under(dir, "truth_assignments.csv");
  std::int64_t expected = 0;
  for (int n : n_cells) expected += n;
  rows = for_each_row(path, "j,cell,component", 3, [&](const auto& f) {
    const auto j = checked_index(to_int(f[0], path), J, path);
    const auto i = checked_index(to_int(f[1], path), n_cells[j], path);
    const auto k = checked_index(to_int(f[2], path), K + 1, path);
    truth.assignments[j][i] = static_cast<int>(k);
  });
  check_rows(path, rows, expected);

  path = path_under(dir, "truth_outlier_mean.csv");
  rows = for_each_row(path, "coord,value", 2, [&](const auto& f) {
    const auto c = checked_index(to_int(f[0], path), d, path);
    truth.outlier_mean(c) = to_double(f[1], path);
  });
  check_rows(path, rows, d);

  path = path_under(dir, "truth_outlier_cov.csv");
  rows = for_each_row(path, "row,col,value", 3, [&](const auto& f) {
    const auto r = checked_index(to_int(f[0], path), d, path);
    const auto c = checked_index(to_int(f[1], path), d, path);
    truth.outlier_cov(r, c) = to_double(f[2], path);
  });
  check_rows(path, rows, static_cast<std::int64_t>(d) * d);

  return truth;
}

void save_population_sizes(const Matrix& sizes,
                           const std::vector<std::string>& sample_ids,
                           const std::vector<int>& population_ids,
                           const std::string& path) {
  if (sizes.rows() != static_cast<Eigen::Index>(sample_ids.size()) ||
      sizes.cols() != static_cast<Eigen::Index>(population_ids.size())) {
    throw DataError("save_population_sizes: label counts disagree with the matrix");
  }
  CsvTable table;
  table.header = {"sample"};
  for (int id : population_ids) table.header.push_back("pop_" + std::to_string(id));
  for (Eigen::Index j = 0; j < sizes.rows(); ++j) {
    std::vector<std::string> row = {sample_ids[j]};
    for (Eigen::Index c = 0; c < sizes.cols(); ++c) {
      row.push_back(format_double(sizes(j, c)));
    }
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

Matrix load_labeled_matrix(const std::string& path,
                           std::vector<std::string>* row_ids,
                           std::vector<std::string>* column_names) {
  const CsvTable table = read_csv(path);
  if (table.header.size() < 2) {
    throw DataError(path + ": need an id column plus at least one value column");
  }
  if (table.rows.empty()) throw DataError(path + ": no data rows");
  const int cols = static_cast<int>(table.header.size()) - 1;
  Matrix values(static_cast<int>(table.rows.size()), cols);
  if (row_ids) row_ids->clear();
  if (column_names) {
    column_names->assign(table.header.begin() + 1, table.header.end());
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (row_ids) row_ids->push_back(table.rows[r][0]);
    for (int c = 0; c < cols; ++c) {
      const std::string context = path + ": row " + std::to_string(r + 1) +
                                  ", column " + table.header[c + 1];
      values(static_cast<int>(r), c) =
          parse_double(table.rows[r][c + 1], context);
    }
  }
  return values;
}

void save_population_quantiles(const std::vector<Matrix>& tables,
                               const std::vector<int>& population_ids,
                               const std::vector<std::string>& marker_names,
                               const std::vector<double>& levels,
                               const std::string& path) {
  const bool with_outlier = tables.size() == population_ids.size() + 1;
  if (!with_outlier && tables.size() != population_ids.size()) {
    throw DataError("save_population_quantiles: id count disagrees with tables");
  }
  CsvTable table;
  table.header = {"population", "marker", "level", "value"};
  for (std::size_t g = 0; g < tables.size(); ++g) {
    const std::string label =
        with_outlier
            ? (g == 0 ? std::string("outlier")
                      : "pop_" + std::to_string(population_ids[g - 1]))
            : "pop_" + std::to_string(population_ids[g]);
    for (std::size_t l = 0; l < levels.size(); ++l) {
      for (std::size_t m = 0; m < marker_names.size(); ++m) {
        table.rows.push_back(
            {label, marker_names[m], format_double(levels[l]),
             format_double(tables[g](static_cast<int>(l), static_cast<int>(m)))});
      }
    }
  }
  write_csv(path, table);
}

void save_pca(const PcaResult& pca, const std::vector<std::string>& row_ids,
              const std::vector<std::string>& column_names,
              const std::string& dir) {
  std::filesystem::create_directories(dir);
  const int r = static_cast<int>(pca.singular_values.size());

  auto pc_header = [&](const std::string& first) {
    std::vector<std::string> header = {first};
    for (int c = 0; c < r; ++c) header.push_back("pc" + std::to_string(c + 1));
    return header;
  };
  auto row_label = [&](const std::vector<std::string>& ids, Eigen::Index i,
                       const char* fallback) {
    return i < static_cast<Eigen::Index>(ids.size())
               ? ids[i]
               : fallback + std::to_string(i);
  };

  CsvTable scores;
  scores.header = pc_header("sample");
  for (Eigen::Index i = 0; i < pca.scores.rows(); ++i) {
    std::vector<std::string> row = {row_label(row_ids, i, "row_")};
    for (int c = 0; c < r; ++c) row.push_back(format_double(pca.scores(i, c)));
    scores.rows.push_back(std::move(row));
  }
  write_csv(path_under(dir, "scores.csv"), scores);

  auto write_variable_table = [&](const std::string& name, const Matrix& m) {
    CsvTable table;
    table.header = pc_header("variable");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::vector<std::string> row = {row_label(column_names, i, "var_")};
      for (int c = 0; c < r; ++c) row.push_back(format_double(m(i, c)));
      table.rows.push_back(std::move(row));
    }
    write_csv(path_under(dir, name), table);
  };
  write_variable_table("loadings.csv", pca.loadings);
  write_variable_table("components.csv", pca.components);

  CsvTable means;
  means.header = {"variable", "mean"};
  for (Eigen::Index i = 0; i < pca.column_means.size(); ++i) {
    means.rows.push_back({row_label(column_names, i, "var_"),
                          format_double(pca.column_means(i))});
  }
  write_csv(path_under(dir, "means.csv"), means);

  CsvTable variance;
  variance.header = {"component", "singular_value", "explained_ratio"};
  for (int c = 0; c < r; ++c) {
    variance.rows.push_back({"pc" + std::to_string(c + 1),
                             format_double(pca.singular_values(c)),
                             format_double(pca.explained_variance_ratio(c))});
  }
  write_csv(path_under(dir, "variance.csv"), variance);
}

void save_geweke(const GewekeReport& report, const std::string& path) {
  json functionals = json::array();
  for (const GewekeFunctional& f : report.functionals) {
    functionals.push_back(json{{"name", f.name},
                               {"forward_mean", f.forward_mean},
                               {"forward_se", f.forward_se},
                               {"gibbs_mean", f.gibbs_mean},
                               {"gibbs_se", f.gibbs_se},
                               {"z", f.z}});
  }
  const json doc{{"iterations", report.iterations},
                 {"max_abs_z", report.max_abs_z},
                 {"pass", report.pass()},
                 {"functionals", functionals}};
  write_text(path, doc.dump(2) + "\n");
}

}  // namespace hiermix
