#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "rnml/errors.hpp"
#include "rnml/types.hpp"

namespace rnml {

/// Shortest 9-significant-digit decimal form, the library's headline format.
inline std::string format_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Round-trip decimal form for cached tables.
inline std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string_view strip_ws(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(strip_ws(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline double parse_double(std::string_view field, int line_no, const std::string& where) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size())
    throw ParseError(where + ": line " + std::to_string(line_no) + ": bad number '" + std::string(field) + "'");
  return v;
}

inline long long parse_int(std::string_view field, int line_no, const std::string& where) {
  long long v = 0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size())
    throw ParseError(where + ": line " + std::to_string(line_no) + ": bad integer '" + std::string(field) + "'");
  return v;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

/// Reads a numeric CSV into a matrix. Rows are observations. Blank lines are
/// skipped; every remaining row must have the same number of fields.
inline Matrix read_matrix_csv(std::istream& in, const std::string& where, bool skip_header = false) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  std::size_t width = 0;
  bool pending_header = skip_header;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = detail::strip_ws(line);
    if (sv.empty()) continue;
    if (pending_header) {
      pending_header = false;
      continue;
    }
    auto fields = detail::split_fields(sv);
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw ParseError(where + ": line " + std::to_string(line_no) + ": expected " +
                       std::to_string(width) + " fields, got " + std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(width);
    for (auto f : fields) row.push_back(detail::parse_double(f, line_no, where));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(where + ": no data rows");
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return out;
}

inline Matrix read_matrix_csv(const std::string& path, bool skip_header = false) {
  auto in = detail::open_input(path);
  return read_matrix_csv(in, path, skip_header);
}

/// Reads a one-column CSV of integer cluster labels.
inline ClusterAssignment read_labels_csv(std::istream& in, const std::string& where, bool skip_header = false) {
  ClusterAssignment out;
  std::string line;
  int line_no = 0;
  bool pending_header = skip_header;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = detail::strip_ws(line);
    if (sv.empty()) continue;
    if (pending_header) {
      pending_header = false;
      continue;
    }
    auto fields = detail::split_fields(sv);
    if (fields.size() != 1)
      throw ParseError(where + ": line " + std::to_string(line_no) + ": expected one label per row");
    out.push_back(static_cast<int>(detail::parse_int(fields[0], line_no, where)));
  }
  if (out.empty()) throw ParseError(where + ": no data rows");
  return out;
}

inline ClusterAssignment read_labels_csv(const std::string& path, bool skip_header = false) {
  auto in = detail::open_input(path);
  return read_labels_csv(in, path, skip_header);
}

inline void write_labels_csv(std::ostream& out, const ClusterAssignment& z) {
  for (int v : z) out << v << '\n';
}

}  // namespace rnml
