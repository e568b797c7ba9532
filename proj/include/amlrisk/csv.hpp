/*
 * Copyright 2026 The amlrisk Authors.
 *
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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace amlrisk::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of `column` in the header; throws SchemaError naming it when absent.
  std::size_t column(std::string_view column) const;
};

// RFC 4180: comma separated, fields with commas, quotes or newlines are quoted.
Table read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Table& table);

std::string escape(const std::string& field);
// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace amlrisk::csv
