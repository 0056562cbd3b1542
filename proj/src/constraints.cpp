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

#include "surveyel/constraints.hpp"

#include <algorithm>
#include <cmath>

#include "surveyel/error.hpp"
#include "format.hpp"

namespace surveyel {

ConstraintKind parse_constraint_kind(const std::string& s) {
    if (s == "subgroup" || s == "subgroup-moment") return ConstraintKind::kSubgroupMoment;
    if (s == "general" || s == "general-moment") return ConstraintKind::kGeneralMoment;
    throw InputError("data-model", "build_constraint_matrix", "unknown constraint kind '" + s + "'");
}

std::string to_string(ConstraintKind kind) {
    return kind == ConstraintKind::kSubgroupMoment ? "subgroup" : "general";
}

std::string constraint_label(const ConstraintEntry& e) {
    if (!e.label.empty()) return e.label;
    if (e.kind == ConstraintKind::kSubgroupMoment) {
        return "E[" + e.target_column + " | " + e.group_column + "=" + fmt17(e.group_value) + "]";
    }
    return "E[" + e.target_column + "]";
}

void validate_constraints(const ConstraintSpec& spec, const std::vector<std::string>& columns) {
    auto has = [&](const std::string& c) {
        return std::find(columns.begin(), columns.end(), c) != columns.end();
    };
    for (const auto& e : spec.entries) {
        if (!has(e.target_column)) {
            throw InputError("data-model", "build_constraint_matrix",
                             "unknown column '" + e.target_column + "'");
        }
        if (e.kind == ConstraintKind::kSubgroupMoment && !has(e.group_column)) {
            throw InputError("data-model", "build_constraint_matrix",
                             "unknown column '" + e.group_column + "'");
        }
        if (!std::isfinite(e.gamma)) {
            throw InputError("data-model", "build_constraint_matrix",
                             "gamma is not finite for " + constraint_label(e));
        }
    }
}

MatrixXd ConstraintMatrix::active() const {
    std::vector<Index> keep;
    for (Index k = 0; k < q(); ++k) {
        if (!vacuous[static_cast<std::size_t>(k)]) keep.push_back(k);
    }
    MatrixXd out(H.rows(), static_cast<Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) out.col(static_cast<Index>(j)) = H.col(keep[j]);
    return out;
}

ConstraintMatrix ConstraintMatrix::none(Index n) { return make_constraint_matrix(MatrixXd(n, 0)); }

ConstraintMatrix make_constraint_matrix(MatrixXd H) {
    ConstraintMatrix cm;
    if (!H.allFinite()) {
        throw InputError("data-model", "build_constraint_matrix", "nonfinite constraint entry");
    }
    cm.vacuous.resize(static_cast<std::size_t>(H.cols()));
    for (Index k = 0; k < H.cols(); ++k) {
        cm.vacuous[static_cast<std::size_t>(k)] = (H.col(k).array() == 0.0).all();
        cm.labels.push_back("h" + std::to_string(k + 1));
    }
    cm.H = std::move(H);
    return cm;
}

ConstraintMatrix build_constraint_matrix(const Dataset& data, const ConstraintSpec& spec) {
    validate_constraints(spec, data.names());
    MatrixXd H(data.n(), static_cast<Index>(spec.entries.size()));
    for (std::size_t k = 0; k < spec.entries.size(); ++k) {
        const auto& e = spec.entries[k];
        const VectorXd& t = data.column(e.target_column);
        VectorXd col = t.array() - e.gamma;
        if (e.kind == ConstraintKind::kSubgroupMoment) {
            const VectorXd& g = data.column(e.group_column);
            col = (g.array() == e.group_value).select(col, 0.0);
        }
        H.col(static_cast<Index>(k)) = col;
    }
    ConstraintMatrix cm = make_constraint_matrix(std::move(H));
    for (std::size_t k = 0; k < spec.entries.size(); ++k) {
        cm.labels[k] = constraint_label(spec.entries[k]);
    }
    return cm;
}

}  // namespace surveyel
