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

#include <optional>
#include <string>
#include <vector>

#include "surveyel/dataset.hpp"

namespace surveyel {

enum class ConstraintKind { kSubgroupMoment, kGeneralMoment };

ConstraintKind parse_constraint_kind(const std::string& s);
std::string to_string(ConstraintKind kind);

// Subgroup:  I{group == group_value} * (target - gamma).
// General:   target - gamma.
struct ConstraintEntry {
    ConstraintKind kind = ConstraintKind::kGeneralMoment;
    std::string group_column;
    double group_value = 0.0;
    std::string target_column;
    double gamma = 0.0;
    std::string label;  // optional; generated when empty
};

struct ConstraintSpec {
    std::vector<ConstraintEntry> entries;
    bool empty() const { return entries.empty(); }
};

struct ConstraintMatrix {
    MatrixXd H;                 // n x q
    std::vector<bool> vacuous;  // column identically zero
    std::vector<std::string> labels;

    Index q() const { return H.cols(); }
    Index n() const { return H.rows(); }
    // Columns that are not vacuous.
    MatrixXd active() const;
    static ConstraintMatrix none(Index n);
};

std::string constraint_label(const ConstraintEntry& entry);
void validate_constraints(const ConstraintSpec& spec, const std::vector<std::string>& columns);
ConstraintMatrix build_constraint_matrix(const Dataset& data, const ConstraintSpec& spec);
ConstraintMatrix make_constraint_matrix(MatrixXd H);

}  // namespace surveyel
