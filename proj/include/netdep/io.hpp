#pragma once

// CSV readers and writers for node-level data, aligned to the node labels
// of a loaded edge list.

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "netdep/error.hpp"
#include "netdep/graph.hpp"

namespace netdep {

/// Columns of a node-keyed CSV reordered to the network's node order.
struct NodeTable {
  std::vector<std::string> columns;  ///< value columns, without the node column
  Eigen::MatrixXd values;            ///< one row per network node
};

namespace detail {

inline double parse_double(const std::string& field, const std::string& what, std::size_t row) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw input_error("malformed-row", what + ": non-numeric value '" + field + "' at row " + std::to_string(row));
  }
  if (!std::isfinite(v)) {
    throw input_error("non-finite", what + ": non-finite value at row " + std::to_string(row));
  }
  return v;
}

inline bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!is_blank(line)) return true;
  }
  return false;
}

inline void strip_bom(std::string& line) {
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
}

}  // namespace detail

/// Reads a CSV whose first column is `node` followed by numeric columns.
/// Every network node must appear exactly once; unknown nodes are rejected.
/// `what` names the file in diagnostics.
inline NodeTable load_node_table(std::istream& in, const LabeledNetwork& net, const std::string& what = "values") {
  std::string line;
  if (!detail::next_content_line(in, line)) throw input_error("empty-file", what + " file is empty");
  detail::strip_bom(line);
  const auto header = detail::split_csv_line(line);
  if (header.size() < 2 || header[0] != "node") {
    throw input_error("bad-header", what + " header must start with 'node' followed by at least one column");
  }
  NodeTable table;
  table.columns.assign(header.begin() + 1, header.end());
  const auto n = static_cast<Eigen::Index>(net.labels.size());
  const auto k = static_cast<Eigen::Index>(table.columns.size());
  table.values = Eigen::MatrixXd::Zero(n, k);
  std::vector<char> seen(net.labels.size(), 0);

  std::size_t row = 0;
  while (detail::next_content_line(in, line)) {
    ++row;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw input_error("malformed-row", what + ": expected " + std::to_string(header.size()) + " fields at row " +
                                             std::to_string(row) + ", got " + std::to_string(fields.size()));
    }
    const auto it = net.index.find(fields[0]);
    if (it == net.index.end()) {
      throw input_error("unknown-node", what + ": node '" + fields[0] + "' at row " + std::to_string(row) +
                                            " does not appear in the edge list");
    }
    if (seen[it->second]) {
      throw input_error("duplicate-node", what + ": node '" + fields[0] + "' repeated at row " + std::to_string(row));
    }
    seen[it->second] = 1;
    for (Eigen::Index c = 0; c < k; ++c) {
      table.values(static_cast<Eigen::Index>(it->second), c) =
          detail::parse_double(fields[static_cast<std::size_t>(c) + 1], what, row);
    }
  }
  std::string missing;
  std::size_t missing_count = 0;
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i]) continue;
    if (missing_count++ < 20) missing += (missing.empty() ? "" : ", ") + net.labels[i];
  }
  if (missing_count > 0) {
    if (missing_count > 20) missing += ", ...";
    throw input_error("missing-node", what + ": " + std::to_string(missing_count) +
                                          " node(s) from the edge list have no value: " + missing);
  }
  return table;
}

/// A single-value table: the `value` column if present, else the only column.
inline std::vector<double> load_node_values(std::istream& in, const LabeledNetwork& net,
                                            const std::string& what = "values") {
  const auto table = load_node_table(in, net, what);
  Eigen::Index col = -1;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (table.columns[c] == "value") col = static_cast<Eigen::Index>(c);
  }
  if (col < 0) {
    if (table.columns.size() != 1) {
      throw input_error("bad-header", what + " file needs a 'value' column or exactly one data column");
    }
    col = 0;
  }
  const Eigen::VectorXd v = table.values.col(col);
  return {v.begin(), v.end()};
}

inline void write_node_values(std::ostream& out, const std::vector<std::string>& labels,
                              const std::vector<double>& values) {
  if (labels.size() != values.size()) throw input_error("dimension-mismatch", "labels and values differ in length");
  out << "node,value\n";
  char buf[64];
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto res = std::to_chars(buf, buf + sizeof buf, values[i]);
    out << labels[i] << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << '\n';
  }
}

/// Dense numeric matrix, one row per line, no header.
inline Eigen::MatrixXd load_matrix_csv(std::istream& in, const std::string& what = "matrix") {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t row = 0;
  while (detail::next_content_line(in, line)) {
    ++row;
    if (row == 1) detail::strip_bom(line);
    const auto fields = detail::split_csv_line(line);
    std::vector<double> r;
    for (const auto& f : fields) r.push_back(detail::parse_double(f, what, row));
    if (!rows.empty() && r.size() != rows.front().size()) {
      throw input_error("malformed-row", what + ": row " + std::to_string(row) + " has " + std::to_string(r.size()) +
                                             " columns, expected " + std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw input_error("empty-file", what + " file is empty");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

}  // namespace netdep
