#pragma once

#include <string>
#include <vector>

#include "hiermix/model.hpp"

namespace hiermix {

/// One parsed delimited table: a header row plus rectangular string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of the named column; throws DataError when absent.
  int column(const std::string& name) const;
};

/// Decimal form of a finite double that parses back to the identical bit
/// pattern (shortest of %.15g/%.16g/%.17g that survives the round trip).
/// Throws DataError on non-finite input.
std::string format_double(double value);

/// Strict parse of a whole cell as a finite real.  Rejects empty cells,
/// trailing garbage, infinities, and NaNs; `context` (file, row, column)
/// prefixes the error message.
double parse_double(const std::string& cell, const std::string& context);

/// Reader for comma-separated files with the usual quoting rules: fields
/// may be wrapped in double quotes, quotes inside quoted fields are
/// doubled, and quoted fields may contain commas and line breaks.  CRLF and
/// LF endings both work; the final newline is optional.  The first record
/// is the header.  Throws DataError on an unreadable or empty file,
/// unbalanced quotes, stray quotes in unquoted fields, or rows whose width
/// differs from the header.
CsvTable read_csv(const std::string& path);

/// Writes header and rows with LF endings, quoting any field that contains
/// a comma, quote, or line break.  Throws DataError when the file cannot be
/// written.
void write_csv(const std::string& path, const CsvTable& table);

/// Reads one cell table per path into a Dataset.  Sample ids are the file
/// stems; every file must carry the exact same header (the marker names, in
/// order), and a mismatch names both files and both headers.  Each data row
/// is one cell, and every value must parse as a finite real; parse and
/// non-finite errors report the file, 1-based data row, and column name.
/// Files without data rows and duplicate sample ids are errors.
Dataset load_samples(const std::vector<std::string>& paths);

/// Writes `<dir>/<sample_id>.csv` per sample with the marker-name header,
/// creating the directory if needed, and returns the paths written.  Values
/// survive a write/read round trip bit for bit.
std::vector<std::string> save_samples(const Dataset& data,
                                      const std::string& dir);

}  // namespace hiermix
