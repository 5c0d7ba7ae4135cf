#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "mue/error.hpp"

namespace mue::csv {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

//! Splits one line on commas. Fields are trimmed; quoting is not supported
//! (none of the documented schemas need it).
inline std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct Row {
  std::size_t line = 0;  // 1-based line number in the source, header is line 1
  std::vector<std::string> fields;
};

//! A parsed table with a mandatory header row.
class Table {
public:
  Table() = default;

  static Table read(std::istream& in, std::string_view source_name) {
    Table t;
    t.source_ = std::string(source_name);
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      auto fields = split(line);
      if (!have_header) {
        t.header_ = fields;
        for (std::size_t i = 0; i < fields.size(); ++i) t.index_[fields[i]] = i;
        have_header = true;
        continue;
      }
      if (fields.size() != t.header_.size())
        throw SchemaError(t.source_ + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(t.header_.size()) + " fields, got " +
                          std::to_string(fields.size()));
      t.rows_.push_back({lineno, std::move(fields)});
    }
    if (!have_header) throw SchemaError(t.source_ + ": missing header row");
    return t;
  }

  void require_columns(const std::vector<std::string>& names) const {
    for (const auto& n : names)
      if (!index_.count(n)) throw SchemaError(source_ + ": missing column '" + n + "'");
  }

  bool has_column(const std::string& name) const { return index_.count(name) > 0; }

  const std::string& get(const Row& r, const std::string& col) const {
    return r.fields.at(index_.at(col));
  }

  double number(const Row& r, const std::string& col) const {
    const auto& s = get(r, col);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw SchemaError(where(r) + ": column '" + col + "' is not a number: '" + s + "'");
    return v;
  }

  std::string where(const Row& r) const { return source_ + ":" + std::to_string(r.line); }

  const std::vector<Row>& rows() const { return rows_; }
  const std::vector<std::string>& header() const { return header_; }
  const std::string& source() const { return source_; }

private:
  std::string source_;
  std::vector<std::string> header_;
  std::map<std::string, std::size_t> index_;
  std::vector<Row> rows_;
};

//! Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << fields[i];
  }
  out << '\n';
}

}  // namespace mue::csv
