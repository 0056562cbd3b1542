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

#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "surveyel/error.hpp"

namespace surveyel::detail {

// Strict reader over one JSON object: every key must be consumed before finish().
class ObjectReader {
public:
    ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }

    [[noreturn]] static void fail(const std::string& path, const std::string& msg) {
        throw InputError("cli", "parse_config", (path.empty() ? std::string("<root>") : path) + ": " + msg);
    }

    bool has(const std::string& key) {
        if (!j_.contains(key)) return false;
        seen_.insert(key);
        return true;
    }

    const nlohmann::json& at(const std::string& key) {
        if (!has(key)) fail(path_, "missing required key '" + key + "'");
        return j_.at(key);
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    std::string str(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_string()) fail(child(key), "expected a string");
        return v.get<std::string>();
    }
    std::string str(const std::string& key, const std::string& def) { return has(key) ? str(key) : def; }

    double num(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_number()) fail(child(key), "expected a number");
        return v.get<double>();
    }
    double num(const std::string& key, double def) { return has(key) ? num(key) : def; }

    long long integer(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_number_integer()) fail(child(key), "expected an integer");
        return v.get<long long>();
    }
    long long integer(const std::string& key, long long def) { return has(key) ? integer(key) : def; }

    bool boolean(const std::string& key, bool def) {
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) fail(child(key), "expected true or false");
        return v.get<bool>();
    }

    std::vector<std::string> strings(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_array()) fail(child(key), "expected an array of strings");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) fail(child(key), "expected an array of strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    std::vector<double> numbers(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_array()) fail(child(key), "expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) fail(child(key), "expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) fail(path_, "unknown key '" + it.key() + "'");
        }
    }

    const std::string& path() const { return path_; }

private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace surveyel::detail
