/*
   Copyright 2026 The ductmc Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

// Deterministic CSV/JSON table output. Every file starts with the command,
// seed and the fully resolved configuration.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ductmc {

enum class OutputFormat { Csv, Json };

OutputFormat parse_format(const std::string& name);
std::string extension(OutputFormat format);

using Cell = std::variant<double, std::uint64_t, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row);
};

struct OutputHeader {
    std::string command;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> config;
};

/// 17 significant digits, so values round-trip exactly.
std::string format_double(double v);

std::string render(const Table& table, const OutputHeader& header, OutputFormat format);

/// Inverse of render() for JSON output.
std::pair<Table, OutputHeader> parse_json_table(const std::string& text);

void emit(const Table& table, const OutputHeader& header, OutputFormat format, const std::filesystem::path& file);

}  // namespace ductmc
