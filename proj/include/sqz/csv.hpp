// Copyright 2026 The sqzchip Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sqz {

// Parse or schema failure in a CSV file; row and column are 1-based, with
// row 1 being the header line.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& message, int row, int column)
      : std::runtime_error(message + " (row " + std::to_string(row) +
                           ", column " + std::to_string(column) + ")"),
        row_(row),
        column_(column) {}

  int row() const { return row_; }
  int column() const { return column_; }

 private:
  int row_;
  int column_;
};

// Plain numeric table: a header of column names and rows of doubles.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) {
        return static_cast<int>(i);
      }
    }
    return -1;
  }

  int require_column(const std::string& name) const {
    const int index = column_index(name);
    if (index < 0) {
      throw CsvError("missing column '" + name + "'", 1,
                     static_cast<int>(columns.size()) + 1);
    }
    return index;
  }
};

// 17 significant digits: the shortest fixed precision that round-trips any
// IEEE-754 double exactly.
inline std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

inline std::string serialise_csv(const CsvTable& table) {
  std::ostringstream out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out << (i ? "," : "") << table.columns[i];
  }
  out << '\n';
  for (const std::vector<double>& row : table.rows) {
    if (row.size() != table.columns.size()) {
      throw std::invalid_argument(
          "serialise_csv: row width does not match the header");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << format_double(row[i]);
    }
    out << '\n';
  }
  return out.str();
}

inline void write_csv(const std::filesystem::path& path,
                      const CsvTable& table) {
  std::ofstream stream(path, std::ios::binary);
  if (!stream) {
    throw std::runtime_error("write_csv: cannot open '" + path.string() +
                             "' for writing");
  }
  stream << serialise_csv(table);
  if (!stream) {
    throw std::runtime_error("write_csv: failed writing '" + path.string() +
                             "'");
  }
}

namespace detail {

inline std::string trim(const std::string& text) {
  std::size_t begin = 0, end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) {
    ++begin;
  }
  while (end > begin &&
         std::isspace(static_cast<unsigned char>(text[end - 1]))) {
    --end;
  }
  return text.substr(begin, end - begin);
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

inline CsvTable parse_csv(std::istream& stream) {
  CsvTable table;
  std::string line;
  int row = 0;
  while (std::getline(stream, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    ++row;
    if (detail::trim(line).empty()) {
      if (row == 1) {
        throw CsvError("empty header line", 1, 1);
      }
      continue;  // ignore blank lines
    }
    const std::vector<std::string> fields = detail::split_fields(line);
    if (row == 1) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i].empty()) {
          throw CsvError("empty column name", 1, static_cast<int>(i) + 1);
        }
      }
      table.columns = fields;
      continue;
    }
    if (fields.size() != table.columns.size()) {
      throw CsvError("expected " + std::to_string(table.columns.size()) +
                         " fields, found " + std::to_string(fields.size()),
                     row, static_cast<int>(fields.size()));
    }
    std::vector<double> values(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const std::string& field = fields[i];
      char* end = nullptr;
      values[i] = std::strtod(field.c_str(), &end);
      if (field.empty() || end != field.c_str() + field.size()) {
        throw CsvError("malformed number '" + field + "'", row,
                       static_cast<int>(i) + 1);
      }
    }
    table.rows.push_back(std::move(values));
  }
  if (table.columns.empty()) {
    throw CsvError("empty file", 1, 1);
  }
  return table;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) {
    throw std::runtime_error("read_csv: cannot open '" + path.string() + "'");
  }
  return parse_csv(stream);
}

}  // namespace sqz
