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

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace surveyel {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class WeightMode { kInverseProbability, kDirect };

// Column roles. Empty strings mean "not tagged".
struct Schema {
    std::string response;
    std::vector<std::string> covariates;
    std::vector<std::string> design;
    std::string weight_source;
    WeightMode weight_mode = WeightMode::kInverseProbability;
    // Raw inclusion probabilities. Defaults to weight_source in inverse mode.
    std::string pi;
    std::string family;
};

struct Table {
    std::vector<std::string> names;
    std::vector<VectorXd> columns;
};

// Strict numeric CSV with a header row. Cells must parse completely as reals.
Table read_csv(const std::string& path);
void write_csv(const std::string& path, const Table& table);

// Result sums to one. Inverse-probability mode inverts before normalizing.
VectorXd normalize_design_weights(const VectorXd& source, WeightMode mode);

// Immutable after construction.
class Dataset {
public:
    Dataset() = default;
    static Dataset from_table(Table table, Schema schema);

    Index n() const { return n_; }
    const std::vector<std::string>& names() const { return names_; }
    bool has_column(const std::string& name) const;
    const VectorXd& column(const std::string& name) const;
    const Schema& schema() const { return schema_; }
    Table table() const;

    const VectorXd& y() const;
    // Normalized design weights, sum to one.
    const VectorXd& d() const { return d_; }
    // Pre-normalization weight: 1/pi in inverse mode, the given value in direct mode,
    // ones when no weight source is tagged.
    const VectorXd& raw_weight() const { return raw_weight_; }
    const std::optional<VectorXd>& pi() const { return pi_; }
    const std::optional<VectorXd>& family() const { return family_; }

    Dataset subset(const std::vector<Index>& rows) const;
    Dataset with_column(const std::string& name, const VectorXd& values) const;
    Dataset with_schema(Schema schema) const;

private:
    Index n_ = 0;
    std::vector<std::string> names_;
    std::vector<VectorXd> columns_;
    std::unordered_map<std::string, std::size_t> index_;
    Schema schema_;
    VectorXd y_;
    VectorXd d_;
    VectorXd raw_weight_;
    std::optional<VectorXd> pi_;
    std::optional<VectorXd> family_;
};

Dataset load_dataset(const std::string& path, const Schema& schema);

// Keep one uniformly chosen member per family. The survivor's pre-normalization
// weight is multiplied by its family size. Adds columns "n_f" and
// "decluster_weight" (plus "decluster_pi" = pi/n_f when pi is present).
Dataset decluster(const Dataset& data, std::uint64_t seed);

}  // namespace surveyel
