#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace stirap_lab {

/// CSV with '#'-prefixed header comments followed by one row of column
/// names (units in brackets) and numeric data rows.
struct Table {
  std::vector<std::string> comments;  // without the leading '# '
  std::vector<std::string> columns;
  Eigen::MatrixXd data;  // rows x columns
};

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline void write_csv(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& c : table.comments) out << "# " << c << "\n";
  for (std::size_t k = 0; k < table.columns.size(); ++k)
    out << (k ? "," : "") << table.columns[k];
  out << "\n";
  for (Eigen::Index r = 0; r < table.data.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.data.cols(); ++c)
      out << (c ? "," : "") << format_number(table.data(r, c));
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  Table table;
  std::string line;
  std::vector<std::vector<double>> rows;
  bool have_columns = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t start = line.find_first_not_of("# ");
      table.comments.push_back(start == std::string::npos ? "" : line.substr(start));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!have_columns) {
      table.columns = cells;
      have_columns = true;
      continue;
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw std::runtime_error("non-numeric cell '" + c + "' in " + path);
      }
    }
    if (row.size() != table.columns.size())
      throw std::runtime_error("ragged row in " + path);
    rows.push_back(std::move(row));
  }
  table.data.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(table.columns.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      table.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c];
  return table;
}

}  // namespace stirap_lab
