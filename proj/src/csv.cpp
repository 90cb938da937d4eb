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

#include "otreg/csv.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace otreg {

CsvError::CsvError(const std::string& path, int line, int column, const std::string& message)
    : std::runtime_error(path + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " +
                         message),
      line_(line),
      column_(column) {}

Matrixd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    int column = 1;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      const std::string cell = line.substr(pos, comma == std::string::npos ? comma : comma - pos);
      std::size_t used = 0;
      double value = 0;
      try {
        value = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw CsvError(path, line_no, column, "not a number: '" + cell + "'");
      }
      // Trailing garbage after the number counts as a parse failure too.
      for (std::size_t k = used; k < cell.size(); ++k)
        if (!std::isspace(static_cast<unsigned char>(cell[k])))
          throw CsvError(path, line_no, column + int(k), "not a number: '" + cell + "'");
      row.push_back(value);
      if (comma == std::string::npos) break;
      pos = comma + 1;
      column = int(comma) + 2;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw CsvError(path, line_no, 1,
                     "expected " + std::to_string(rows.front().size()) + " columns, got " +
                         std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CsvError(path, 1, 1, "empty matrix file");
  Matrixd m(Index(rows.size()), Index(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[std::size_t(i)][std::size_t(j)];
  return m;
}

std::string format_double(double v) {
  char buf[64];
  // Shortest representation that parses back exactly.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::stod(buf) == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out << contents;
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename " + tmp + " -> " + path + ": " + ec.message());
}

void write_matrix_csv(const Matrixd& m, const std::string& path) {
  std::ostringstream out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvWriter::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size())
    throw std::invalid_argument("CsvWriter: row width does not match header");
  rows_.push_back(std::move(row));
}

void CsvWriter::write(const std::string& path) const {
  std::ostringstream out;
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  emit(header_);
  for (const auto& row : rows_) emit(row);
  write_text_atomic(path, out.str());
}

void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ostringstream out;
  for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
  write_text_atomic(path, out.str());
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::map<std::string, std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    entries[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return entries;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (const char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace otreg
