// SPDX-License-Identifier: Apache-2.0
#ifndef SIMHARNESS_CSV_HPP
#define SIMHARNESS_CSV_HPP

#include <string>
#include <unordered_map>
#include <vector>

namespace simharness::csv {

/// Minimal comma-separated table with a header row. Field values are kept
/// verbatim; the writers in this project never emit commas, quotes or CR.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
  bool has_column(const std::string& name) const { return column(name) >= 0; }
};

Table read_file(const std::string& path);
Table parse(const std::string& text);
void write_file(const std::string& path, const Table& t);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// strtod with empty -> NaN and "inf"/"-inf" support.
double parse_double(const std::string& field);

}  // namespace simharness::csv

#endif
