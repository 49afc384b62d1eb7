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

#include "ductmc/emit.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "ductmc/config.hpp"

namespace ductmc {

OutputFormat parse_format(const std::string& name) {
    if (name == "csv") {
        return OutputFormat::Csv;
    }
    if (name == "json") {
        return OutputFormat::Json;
    }
    throw ConfigError(fmt::format("--format: expected csv or json, got '{}'", name));
}

std::string extension(OutputFormat format) { return format == OutputFormat::Csv ? ".csv" : ".json"; }

void Table::add(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
        throw std::logic_error("table row width does not match the header");
    }
    rows.push_back(std::move(row));
}

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

namespace {

std::string cell_text(const Cell& cell) {
    if (const auto* d = std::get_if<double>(&cell)) {
        return format_double(*d);
    }
    if (const auto* u = std::get_if<std::uint64_t>(&cell)) {
        return std::to_string(*u);
    }
    return std::get<std::string>(cell);
}

std::string render_csv(const Table& table, const OutputHeader& header) {
    std::string out = fmt::format("# ductmc {}\n# seed = {}\n", header.command, header.seed);
    for (const auto& [key, value] : header.config) {
        out += fmt::format("# {} = {}\n", key, value);
    }
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        out += (c ? "," : "") + table.columns[c];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out += (c ? "," : "") + cell_text(row[c]);
        }
        out += '\n';
    }
    return out;
}

std::string render_json(const Table& table, const OutputHeader& header) {
    nlohmann::ordered_json doc;
    doc["command"] = header.command;
    doc["seed"] = header.seed;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    for (const auto& [key, value] : header.config) {
        config[key] = value;
    }
    doc["config"] = config;
    doc["columns"] = table.columns;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
        nlohmann::ordered_json r = nlohmann::ordered_json::array();
        for (const auto& cell : row) {
            std::visit([&r](const auto& v) { r.push_back(v); }, cell);
        }
        rows.push_back(std::move(r));
    }
    doc["rows"] = rows;
    return doc.dump(2) + "\n";
}

}  // namespace

std::string render(const Table& table, const OutputHeader& header, OutputFormat format) {
    return format == OutputFormat::Csv ? render_csv(table, header) : render_json(table, header);
}

std::pair<Table, OutputHeader> parse_json_table(const std::string& text) {
    const auto doc = nlohmann::ordered_json::parse(text);
    OutputHeader header;
    header.command = doc.at("command").get<std::string>();
    header.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& [key, value] : doc.at("config").items()) {
        header.config.emplace_back(key, value.get<std::string>());
    }
    Table table;
    table.columns = doc.at("columns").get<std::vector<std::string>>();
    for (const auto& r : doc.at("rows")) {
        std::vector<Cell> row;
        for (const auto& v : r) {
            if (v.is_number_unsigned()) {
                row.emplace_back(v.get<std::uint64_t>());
            } else if (v.is_number()) {
                row.emplace_back(v.get<double>());
            } else {
                row.emplace_back(v.get<std::string>());
            }
        }
        table.rows.push_back(std::move(row));
    }
    return {table, header};
}

void emit(const Table& table, const OutputHeader& header, OutputFormat format, const std::filesystem::path& file) {
    const std::string body = render(table, header, format);
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error(fmt::format("cannot open '{}' for writing", file.string()));
    }
    out << body;
    out.flush();
    if (!out) {
        throw std::runtime_error(fmt::format("write to '{}' failed", file.string()));
    }
}

}  // namespace ductmc
