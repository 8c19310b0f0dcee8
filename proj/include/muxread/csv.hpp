#pragma once

// Minimal CSV writing/reading for the command-line tools.  Files begin with
// '#'-prefixed comment lines (tool name, config hash, seed), then a header
// row of column names, then numeric rows.  Numbers are printed with %.12g,
// so a rerun with the same inputs produces byte-identical files.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "muxread/errors.hpp"

namespace muxread {

struct CsvTable {
  std::vector<std::string> comments;            // written as "# <line>"
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline void write_csv(std::ostream& out, const CsvTable& t) {
  for (const auto& c : t.comments) out << "# " << c << "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    out << (i ? "," : "") << t.columns[i];
  out << "\n";
  for (const auto& row : t.rows) {
    if (row.size() != t.columns.size())
      throw invalid_input("csv: row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_number(row[i]);
    out << "\n";
  }
}

inline void write_csv_file(const std::string& path, const CsvTable& t) {
  std::ofstream out(path);
  if (!out) throw invalid_input("csv: cannot write '" + path + "'");
  write_csv(out, t);
}

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t start = line.find_first_not_of("# ");
      t.comments.push_back(start == std::string::npos ? ""
                                                      : line.substr(start));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header_seen) {
      t.columns = cells;
      header_seen = true;
      continue;
    }
    if (cells.size() != t.columns.size())
      throw invalid_input("csv: row width does not match header");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      char* end = nullptr;
      double v = std::strtod(c.c_str(), &end);
      if (end == c.c_str() || *end != '\0')
        throw invalid_input("csv: non-numeric cell '" + c + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (!header_seen) throw invalid_input("csv: no header row");
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("csv: cannot open '" + path + "'");
  return read_csv(in);
}

}  // namespace muxread
