/*
 * Copyright 2026 The surveyel Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "surveyel/dataset.hpp"
#include "surveyel/error.hpp"
#include "format.hpp"

namespace surveyel {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        out.push_back(trim(cell));
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

}  // namespace

Table read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("data-model", "load_dataset", "cannot open file '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError("data-model", "load_dataset", "empty file '" + path + "'");
    }
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
        line = line.substr(3);  // UTF-8 BOM
    }
    Table t;
    for (auto& h : split(line)) {
        t.names.push_back(unquote(h));
    }
    for (std::size_t j = 0; j < t.names.size(); ++j) {
        if (t.names[j].empty()) {
            throw InputError("data-model", "load_dataset",
                             "empty header name in column " + std::to_string(j + 1));
        }
        for (std::size_t k = 0; k < j; ++k) {
            if (t.names[k] == t.names[j]) {
                throw InputError("data-model", "load_dataset",
                                 "duplicate column '" + t.names[j] + "'");
            }
        }
    }
    std::vector<std::vector<double>> cols(t.names.size());
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != t.names.size()) {
            throw InputError("data-model", "load_dataset",
                             "length mismatch at line " + std::to_string(row) + ": expected " +
                                 std::to_string(t.names.size()) + " cells, found " +
                                 std::to_string(cells.size()));
        }
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const std::string& c = cells[j];
            if (c.empty()) {
                throw InputError("data-model", "load_dataset",
                                 "missing value in column '" + t.names[j] + "' at line " +
                                     std::to_string(row));
            }
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(c.c_str(), &end);
            if (end != c.c_str() + c.size() || errno == ERANGE || !std::isfinite(v)) {
                throw InputError("data-model", "load_dataset",
                                 "non-numeric cell '" + c + "' in column '" + t.names[j] +
                                     "' at line " + std::to_string(row));
            }
            cols[j].push_back(v);
        }
    }
    for (auto& c : cols) {
        t.columns.push_back(Eigen::Map<VectorXd>(c.data(), static_cast<Index>(c.size())));
    }
    return t;
}

void write_csv(const std::string& path, const Table& table) {
    std::ofstream out(path);
    if (!out) {
        throw InputError("data-model", "write_csv", "cannot write '" + path + "'");
    }
    for (std::size_t j = 0; j < table.names.size(); ++j) {
        out << (j ? "," : "") << table.names[j];
    }
    out << '\n';
    const Index n = table.columns.empty() ? 0 : table.columns.front().size();
    for (Index i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < table.columns.size(); ++j) {
            out << (j ? "," : "") << fmt17(table.columns[j](i));
        }
        out << '\n';
    }
}

}  // namespace surveyel
