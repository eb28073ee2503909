#pragma once

// Keel-style CSV ingestion for the metric-learning problem: '@' header lines
// and an optional column-name row are skipped, the last column is the class
// label (any string), the rest are numeric features.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spdopt/generators.hpp"

namespace spdopt {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

inline bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

}  // namespace detail

/// Parses CSV text. Labels are mapped to consecutive integers in order of
/// first appearance. Features are z-scored per column.
inline LabelledData parse_keel_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::map<std::string, int> label_ids;
  std::string line;
  std::size_t width = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '@' || t[0] == '%') continue;
    const auto cells = detail::split_csv(t);
    if (cells.size() < 2) throw DomainError("csv line " + std::to_string(line_no) + ": need features and a label");
    std::vector<double> feats(cells.size() - 1);
    bool numeric = true;
    for (std::size_t k = 0; k + 1 < cells.size(); ++k) numeric = numeric && detail::parse_double(cells[k], feats[k]);
    if (!numeric) {
      if (rows.empty()) continue;  // header row
      throw DomainError("csv line " + std::to_string(line_no) + ": non-numeric feature");
    }
    if (width == 0) width = feats.size();
    if (feats.size() != width) throw DimensionError("csv line " + std::to_string(line_no) + ": ragged row");
    const auto [it, inserted] = label_ids.emplace(cells.back(), static_cast<int>(label_ids.size()));
    labels.push_back(it->second);
    rows.push_back(std::move(feats));
  }
  if (rows.size() < 2) throw DomainError("csv: need at least two samples");
  LabelledData out{Matrix(static_cast<Index>(rows.size()), static_cast<Index>(width)), std::move(labels)};
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) out.features(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  zscore_columns(out.features);
  return out;
}

inline LabelledData load_keel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open dataset '" + path + "'");
  return parse_keel_csv(in);
}

}  // namespace spdopt
