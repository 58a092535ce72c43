#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "evsel/common.hpp"
#include "evsel/model.hpp"

namespace evsel {

// Minimal CSV: comma separated, UTF-8, '.' decimal, one header row, no
// quoting. Cell coercion errors name the row and column.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  Eigen::Index n_rows() const { return static_cast<Eigen::Index>(rows.size()); }

  int column_index(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return -1;
    return static_cast<int>(it - header.begin());
  }

  double numeric(std::size_t row, std::size_t col) const {
    const std::string& cell = rows[row][col];
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (used != cell.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw io_error("csv: cannot parse '" + cell + "' as a number at row " +
                     std::to_string(row + 2) + ", column '" + header[col] + "'");
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& is, const std::string& what = "input") {
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw io_error("csv: " + what + " is empty");
  t.header = detail::split_csv_line(line);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != t.header.size())
      throw io_error("csv: row " + std::to_string(lineno) + " has " +
                     std::to_string(cells.size()) + " cells, expected " +
                     std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("csv: cannot open '" + path + "'");
  return read_csv(f, path);
}

// Builds a Dataset with the response column pulled out, the optional group
// column label-encoded, and every remaining column used as a covariate.
inline Dataset dataset_from_csv(const CsvTable& t, const std::string& response,
                                const std::string& group = "") {
  const int yc = t.column_index(response);
  if (yc < 0) throw config_error("dataset: response column '" + response + "' not found");
  int gc = -1;
  if (!group.empty()) {
    gc = t.column_index(group);
    if (gc < 0) throw config_error("dataset: group column '" + group + "' not found");
  }
  const Eigen::Index n = t.n_rows();
  if (n < 2) throw config_error("dataset: need at least 2 data rows");

  Dataset d;
  d.y.resize(n);
  std::vector<int> covariate_cols;
  for (int c = 0; c < static_cast<int>(t.header.size()); ++c) {
    if (c == yc || c == gc) continue;
    covariate_cols.push_back(c);
    d.names.push_back(t.header[c]);
  }
  if (covariate_cols.empty()) throw config_error("dataset: no covariate columns left");
  d.X.resize(n, static_cast<Eigen::Index>(covariate_cols.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    d.y[i] = t.numeric(i, yc);
    for (std::size_t k = 0; k < covariate_cols.size(); ++k)
      d.X(i, static_cast<Eigen::Index>(k)) = t.numeric(i, covariate_cols[k]);
  }
  if (gc >= 0) {
    std::map<std::string, int> labels;
    d.group.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto [it, fresh] = labels.emplace(t.rows[i][gc], static_cast<int>(labels.size()));
      d.group[i] = it->second;
    }
  }
  d.validate();
  return d;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace evsel
