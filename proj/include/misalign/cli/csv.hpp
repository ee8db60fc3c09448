// Copyright 2026 The misalign-tomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace misalign::cli {

/// Comment lines ("# key: value"), a header row and data rows. Cells are
/// kept as text; numbers go through format_decimal when written.
struct CsvTable {
  std::vector<std::pair<std::string, std::string>> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(const std::vector<std::optional<double>>& values);
  std::optional<std::string> comment(const std::string& key) const;
  int column(const std::string& name) const;  // -1 when absent
  /// Empty optional for an empty cell; throws std::runtime_error on text
  /// that is not a number.
  std::optional<double> number(std::size_t row, int col) const;
};

/// Writes with LF line endings, replacing the file atomically.
void write_csv(const std::filesystem::path& path, const CsvTable& table);
/// Throws std::runtime_error when the file is missing or malformed.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace misalign::cli
