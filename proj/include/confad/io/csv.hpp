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

// CSV ingestion and output helpers. Header row required; UTF-8, comma
// separated, '.' decimal, no locale handling.

#ifndef CONFAD_IO_CSV_HPP_
#define CONFAD_IO_CSV_HPP_

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "confad/core.hpp"

namespace confad::io {

// Splits one CSV record; double-quoted fields may contain commas and "".
std::vector<std::string> split_csv_line(std::string_view line);

// Every column except label_column is a numeric feature. Parse errors name
// the 1-based data row and the column. A missing label column is an error
// unless label_optional is set.
DataMatrix read_data_csv(std::istream& in,
                         const std::optional<std::string>& label_column = {},
                         bool label_optional = false);
DataMatrix read_data_csv_file(const std::string& path,
                              const std::optional<std::string>& label_column = {},
                              bool label_optional = false);

// Writes features (and labels as a trailing "label" column when present).
void write_data_csv(std::ostream& os, const DataMatrix& data);

// Shortest text that round-trips the double.
std::string format_double(double v);

std::string read_file(const std::string& path);

}  // namespace confad::io

#endif  // CONFAD_IO_CSV_HPP_
