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

#include "surveyel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "surveyel/error.hpp"

namespace surveyel {

VectorXd normalize_design_weights(const VectorXd& source, WeightMode mode) {
    if (source.size() == 0) {
        throw InputError("data-model", "normalize_design_weights", "empty weight vector");
    }
    for (Index i = 0; i < source.size(); ++i) {
        if (!(source(i) > 0.0) || !std::isfinite(source(i))) {
            const char* what = mode == WeightMode::kInverseProbability
                                   ? "nonpositive inclusion probability"
                                   : "nonpositive weight";
            throw InputError("data-model", "normalize_design_weights",
                             std::string(what) + " at row " + std::to_string(i + 1));
        }
    }
    VectorXd w = mode == WeightMode::kInverseProbability ? source.cwiseInverse() : source;
    return w / w.sum();
}

Dataset Dataset::from_table(Table table, Schema schema) {
    const char* op = "load_dataset";
    if (table.names.size() != table.columns.size()) {
        throw InputError("data-model", op, "names and columns differ in count");
    }
    Dataset ds;
    ds.n_ = table.columns.empty() ? 0 : table.columns.front().size();
    for (std::size_t j = 0; j < table.names.size(); ++j) {
        if (table.columns[j].size() != ds.n_) {
            throw InputError("data-model", op, "length mismatch in column '" + table.names[j] + "'");
        }
        for (Index i = 0; i < ds.n_; ++i) {
            if (!std::isfinite(table.columns[j](i))) {
                throw InputError("data-model", op,
                                 "missing or nonfinite value in column '" + table.names[j] +
                                     "' at row " + std::to_string(i + 1));
            }
        }
        if (!ds.index_.emplace(table.names[j], j).second) {
            throw InputError("data-model", op, "duplicate column '" + table.names[j] + "'");
        }
    }
    ds.names_ = std::move(table.names);
    ds.columns_ = std::move(table.columns);
    if (ds.n_ < 1) {
        throw InputError("data-model", op, "dataset has no rows");
    }

    auto require = [&](const std::string& name, const char* role) {
        if (!ds.has_column(name)) {
            throw InputError("data-model", op,
                             std::string("schema error: ") + role + " column '" + name +
                                 "' not found");
        }
    };
    if (!schema.response.empty()) require(schema.response, "response");
    for (const auto& c : schema.covariates) require(c, "covariate");
    for (const auto& c : schema.design) require(c, "design");
    if (!schema.weight_source.empty()) require(schema.weight_source, "weight-source");
    if (!schema.family.empty()) require(schema.family, "family");
    if (schema.pi.empty() && !schema.weight_source.empty() &&
        schema.weight_mode == WeightMode::kInverseProbability) {
        schema.pi = schema.weight_source;
    }
    if (!schema.pi.empty()) require(schema.pi, "inclusion-probability");

    if (!schema.response.empty()) {
        ds.y_ = ds.column(schema.response);
    }
    if (!schema.pi.empty()) {
        const VectorXd& p = ds.column(schema.pi);
        for (Index i = 0; i < p.size(); ++i) {
            if (!(p(i) > 0.0)) {
                throw InputError("data-model", op,
                                 "nonpositive inclusion probability at row " +
                                     std::to_string(i + 1));
            }
        }
        ds.pi_ = p;
    }
    if (!schema.weight_source.empty()) {
        const VectorXd& src = ds.column(schema.weight_source);
        ds.d_ = normalize_design_weights(src, schema.weight_mode);
        ds.raw_weight_ = schema.weight_mode == WeightMode::kInverseProbability
                             ? VectorXd(src.cwiseInverse())
                             : src;
    } else {
        ds.d_ = VectorXd::Constant(ds.n_, 1.0 / static_cast<double>(ds.n_));
        ds.raw_weight_ = VectorXd::Ones(ds.n_);
    }
    if (!schema.family.empty()) {
        ds.family_ = ds.column(schema.family);
    }
    ds.schema_ = std::move(schema);
    return ds;
}

bool Dataset::has_column(const std::string& name) const { return index_.count(name) > 0; }

const VectorXd& Dataset::column(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
        throw InputError("data-model", "column", "unknown column '" + name + "'");
    }
    return columns_[it->second];
}

const VectorXd& Dataset::y() const {
    if (schema_.response.empty()) {
        throw InputError("data-model", "response", "no response column is tagged");
    }
    return y_;
}

Table Dataset::table() const { return Table{names_, columns_}; }

Dataset Dataset::subset(const std::vector<Index>& rows) const {
    Table t;
    t.names = names_;
    for (const auto& c : columns_) {
        VectorXd s(static_cast<Index>(rows.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) {
            s(static_cast<Index>(k)) = c(rows[k]);
        }
        t.columns.push_back(std::move(s));
    }
    return from_table(std::move(t), schema_);
}

Dataset Dataset::with_column(const std::string& name, const VectorXd& values) const {
    Table t = table();
    auto it = index_.find(name);
    if (it != index_.end()) {
        t.columns[it->second] = values;
    } else {
        t.names.push_back(name);
        t.columns.push_back(values);
    }
    return from_table(std::move(t), schema_);
}

Dataset Dataset::with_schema(Schema schema) const { return from_table(table(), std::move(schema)); }

Dataset load_dataset(const std::string& path, const Schema& schema) {
    return Dataset::from_table(read_csv(path), schema);
}

Dataset decluster(const Dataset& data, std::uint64_t seed) {
    if (!data.family()) {
        throw InputError("data-model", "decluster", "missing family column");
    }
    if (data.schema().weight_source.empty()) {
        throw InputError("data-model", "decluster", "no weight source is tagged");
    }
    const VectorXd& fam = *data.family();
    std::map<double, std::vector<Index>> members;
    for (Index i = 0; i < data.n(); ++i) {
        members[fam(i)].push_back(i);
    }
    std::mt19937_64 rng(seed);
    std::vector<Index> keep;
    for (const auto& [id, rows] : members) {
        std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
        keep.push_back(rows[pick(rng)]);
    }
    std::sort(keep.begin(), keep.end());
    VectorXd nf(static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        nf(static_cast<Index>(k)) = static_cast<double>(members[fam(keep[k])].size());
    }

    Table t = data.table();
    Table out;
    out.names = t.names;
    for (const auto& c : t.columns) {
        VectorXd s(static_cast<Index>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k) s(static_cast<Index>(k)) = c(keep[k]);
        out.columns.push_back(std::move(s));
    }
    VectorXd raw(static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        raw(static_cast<Index>(k)) = data.raw_weight()(keep[k]) * nf(static_cast<Index>(k));
    }
    auto put = [&](const std::string& name, VectorXd v) {
        for (std::size_t j = 0; j < out.names.size(); ++j) {
            if (out.names[j] == name) {
                out.columns[j] = std::move(v);
                return;
            }
        }
        out.names.push_back(name);
        out.columns.push_back(std::move(v));
    };
    put("n_f", nf);
    put("decluster_weight", raw);
    Schema schema = data.schema();
    schema.weight_source = "decluster_weight";
    schema.weight_mode = WeightMode::kDirect;
    if (data.pi()) {
        VectorXd p(static_cast<Index>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k) {
            p(static_cast<Index>(k)) = (*data.pi())(keep[k]) / nf(static_cast<Index>(k));
        }
        put("decluster_pi", p);
        schema.pi = "decluster_pi";
    }
    return Dataset::from_table(std::move(out), std::move(schema));
}

}  // namespace surveyel
