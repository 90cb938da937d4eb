// Copyright 2026 The otreg Authors
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

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "otreg/types.hpp"

namespace otreg {

/// Parse failure with 1-based line/column position.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& path, int line, int column, const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_, column_;
};

/// Filesystem failure (missing file, unwritable directory).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Dense matrix file: one row per line, comma-separated, no header.
Matrixd read_matrix_csv(const std::string& path);

/// Written atomically (temp file + rename). Values use shortest-exact
/// formatting so identical matrices produce identical bytes.
void write_matrix_csv(const Matrixd& m, const std::string& path);

/// Shortest decimal that round-trips the double exactly.
std::string format_double(double v);

/// Atomic text-file write (temp file + rename).
void write_text_atomic(const std::string& path, const std::string& contents);

/// Results table with a header row.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(std::vector<std::string> row);
  void write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// key=value pairs, one per line.
void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries);
std::map<std::string, std::string> read_manifest(const std::string& path);

/// FNV-1a; stable across platforms, used to fingerprint configs.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace otreg
