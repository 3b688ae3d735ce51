#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace argjudge::detail {

struct CsvRow {
  std::size_t line = 0;  // 1-based physical line where the record starts
  std::vector<std::string> fields;
};

// RFC 4180 reader: quoted fields, doubled quotes, embedded delimiters and newlines,
// CRLF line endings and a leading UTF-8 BOM. Blank lines are skipped.
std::vector<CsvRow> read_delimited(std::string_view text, char delimiter);

/// One record, newline-terminated; fields are quoted only when needed.
std::string write_delimited_row(const std::vector<std::string>& fields, char delimiter);

std::string slurp_file(const std::string& path);

}  // namespace argjudge::detail
