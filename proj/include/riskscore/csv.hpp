#pragma once

// Minimal delimiter-separated text I/O with RFC-4180 style quoting. Fields
// containing the delimiter, a quote or a newline are quoted on write and
// unquoted on read; everything else passes through verbatim.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "riskscore/common.hpp"

namespace riskscore::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::string escape(const std::string& field, char delim) {
  bool needs_quote = field.find(delim) != std::string::npos ||
                     field.find('"') != std::string::npos ||
                     field.find('\n') != std::string::npos ||
                     field.find('\r') != std::string::npos;
  if (!needs_quote) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::vector<std::string> parse_line(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      in_quotes = true;
    } else if (c == delim) {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline Table read(const std::string& path, char delim = ',') {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  Table table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == EOF) break;
    auto fields = parse_line(line, delim);
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  if (first) throw DataError("empty file: " + path);
  return table;
}

inline void write(const std::string& path, const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& rows, char delim = ',') {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out << delim;
    out << escape(header[j], delim);
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << delim;
      out << escape(row[j], delim);
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace riskscore::csv
