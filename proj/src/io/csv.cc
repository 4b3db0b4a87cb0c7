/*
 * Copyright 2026 The confad Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "confad/io/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace confad::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

Error parse_error(std::size_t row, const std::string& column,
                  const std::string& what) {
  return Error(ErrorCode::kParseError, "row " + std::to_string(row) +
                                           ", column '" + column + "': " + what);
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

DataMatrix read_data_csv(std::istream& in,
                         const std::optional<std::string>& label_column,
                         bool label_optional) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kParseError, "missing header row");
  }
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = std::string(trim(h));
  std::optional<std::size_t> label_index;
  if (label_column) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == *label_column) label_index = j;
    }
    if (!label_index && !label_optional) {
      throw Error(ErrorCode::kParseError,
                  "label column '" + *label_column + "' not in header");
    }
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != label_index) names.push_back(header[j]);
  }
  if (names.empty()) throw Error(ErrorCode::kParseError, "no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw parse_error(row, fields.size() < header.size() ? header[fields.size()]
                                                           : header.back(),
                        "expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string_view cell = trim(fields[j]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() ||
          !std::isfinite(v)) {
        throw parse_error(row, header[j],
                          "cannot parse '" + std::string(cell) + "' as a finite number");
      }
      if (label_index && j == *label_index) {
        if (v != 0.0 && v != 1.0) {
          throw parse_error(row, header[j], "label must be 0 or 1");
        }
        labels.push_back(static_cast<int>(v));
      } else {
        values.push_back(v);
      }
    }
  }
  if (row == 0) throw Error(ErrorCode::kEmptyInput, "CSV has no data rows");
  std::optional<std::vector<int>> label_vec;
  if (label_index) label_vec = std::move(labels);
  const std::size_t cols = names.size();
  return DataMatrix::from_flat(row, cols, std::move(values),
                               std::move(label_vec), std::move(names));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DataMatrix read_data_csv_file(const std::string& path,
                              const std::optional<std::string>& label_column,
                              bool label_optional) {
  std::istringstream in(read_file(path));
  return read_data_csv(in, label_column, label_optional);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_data_csv(std::ostream& os, const DataMatrix& data) {
  const auto& names = data.column_names();
  for (std::size_t j = 0; j < data.cols(); ++j) {
    if (j) os << ',';
    os << (j < names.size() ? names[j] : "x" + std::to_string(j));
  }
  if (data.labels()) os << ",label";
  os << '\n';
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t j = 0; j < data.cols(); ++j) {
      if (j) os << ',';
      os << format_double(data.at(i, j));
    }
    if (data.labels()) os << ',' << (*data.labels())[i];
    os << '\n';
  }
}

}  // namespace confad::io
