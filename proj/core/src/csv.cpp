#include "hiermix/csv.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "hiermix/errors.hpp"

namespace hiermix {

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += ',';
    out += parts[i];
  }
  return out;
}

bool bit_equal(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  throw DataError("missing column \"" + name + "\" (header: " + join(header) +
                  ")");
}

std::string format_double(double value) {
  if (!std::isfinite(value)) {
    throw DataError("refusing to serialize a non-finite value");
  }
  char buf[40];
  for (int precision : {15, 16, 17}) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    if (precision == 17 || bit_equal(std::strtod(buf, nullptr), value)) break;
  }
  return buf;
}

double parse_double(const std::string& cell, const std::string& context) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || end != begin + cell.size()) {
    throw DataError(context + ": cannot parse \"" + cell + "\" as a real");
  }
  if (!std::isfinite(value)) {
    throw DataError(context + ": non-finite value \"" + cell + "\"");
  }
  return value;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  if (text.empty()) throw DataError(path + ": empty file");

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool at_field_start = true;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    at_field_start = true;
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };
  auto record_number = [&] { return records.size() + 1; };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (at_field_start) {
          in_quotes = true;
          field_was_quoted = true;
          at_field_start = false;
        } else {
          throw DataError(path + ": record " + std::to_string(record_number()) +
                          ": stray quote in unquoted field");
        }
        break;
      case ',':
        end_field();
        break;
      case '\n':
        end_record();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') {
          end_record();
          ++i;
        } else {
          throw DataError(path + ": record " + std::to_string(record_number()) +
                          ": stray carriage return");
        }
        break;
      default:
        if (field_was_quoted) {
          throw DataError(path + ": record " + std::to_string(record_number()) +
                          ": text after closing quote");
        }
        field += c;
        at_field_start = false;
        break;
    }
  }
  if (in_quotes) throw DataError(path + ": unterminated quoted field");
  // A final record without a trailing newline still counts; a trailing
  // newline must not create an empty one.
  if (!record.empty() || !field.empty() || !at_field_start) end_record();

  if (records.empty()) throw DataError(path + ": empty file");
  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw DataError(path + ": record " + std::to_string(r + 1) + " has " +
                      std::to_string(records[r].size()) + " fields, header has " +
                      std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open file for writing");
  auto write_field = [&out](const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) {
      out << field;
      return;
    }
    out << '"';
    for (char c : field) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
  };
  auto write_record = [&](const std::vector<std::string>& record) {
    for (std::size_t i = 0; i < record.size(); ++i) {
      if (i > 0) out << ',';
      write_field(record[i]);
    }
    out << '\n';
  };
  write_record(table.header);
  for (const auto& row : table.rows) write_record(row);
  if (!out) throw DataError(path + ": write failed");
}

Dataset load_samples(const std::vector<std::string>& paths) {
  if (paths.empty()) throw DataError("no sample files given");
  Dataset data;
  std::string header_owner;
  std::set<std::string> seen_ids;
  for (const auto& path : paths) {
    const CsvTable table = read_csv(path);
    if (data.marker_names.empty()) {
      data.marker_names = table.header;
      header_owner = path;
    } else if (table.header != data.marker_names) {
      throw DataError("header mismatch: " + header_owner + " has \"" +
                      join(data.marker_names) + "\" but " + path + " has \"" +
                      join(table.header) + "\"");
    }
    if (table.rows.empty()) throw DataError(path + ": no data rows");

    const std::string id = std::filesystem::path(path).stem().string();
    if (!seen_ids.insert(id).second) {
      throw DataError("duplicate sample id \"" + id + "\"");
    }
    data.sample_ids.push_back(id);

    const int n = static_cast<int>(table.rows.size());
    const int d = static_cast<int>(table.header.size());
    Matrix cells(n, d);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < d; ++c) {
        const std::string context = path + ": row " + std::to_string(r + 1) +
                                    ", column " + table.header[c];
        cells(r, c) = parse_double(table.rows[r][c], context);
      }
    }
    data.samples.push_back(std::move(cells));
  }
  data.validate();
  return data;
}

std::vector<std::string> save_samples(const Dataset& data,
                                      const std::string& dir) {
  data.validate();
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  for (int j = 0; j < data.n_samples(); ++j) {
    CsvTable table;
    table.header = data.marker_names;
    const Matrix& cells = data.samples[j];
    table.rows.reserve(cells.rows());
    for (Eigen::Index r = 0; r < cells.rows(); ++r) {
      std::vector<std::string> row;
      row.reserve(cells.cols());
      for (Eigen::Index c = 0; c < cells.cols(); ++c) {
        row.push_back(format_double(cells(r, c)));
      }
      table.rows.push_back(std::move(row));
    }
    const std::string path =
        (std::filesystem::path(dir) / (data.sample_ids[j] + ".csv")).string();
    write_csv(path, table);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace hiermix
