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

#include <string>

#include <json.hpp>

#include "surveyel/constraints.hpp"
#include "surveyel/estimators.hpp"
#include "surveyel/simulate.hpp"

namespace surveyel {

using Json = nlohmann::ordered_json;

// Nonfinite numbers are written as null.
Json to_json(const VectorXd& v);
Json to_json(const MatrixXd& m);  // array of rows
Json to_json(const EstimateResult& fit, bool include_weights = true);
Json to_json(const MCSummary& summary, bool include_replicates = false);
Json to_json(const DesignSpec& spec);
Json to_json(const ConstraintSpec& spec);

// Strict readers; unknown keys are errors. `path` prefixes error messages.
ConstraintSpec constraints_from_json(const nlohmann::json& j, const std::string& path = "constraints");
LinearTerm linear_from_json(const nlohmann::json& j, const std::string& path);
DesignSpec design_from_json(const nlohmann::json& j, const std::string& path = "simulation");

// Parse text, reporting syntax errors with line and column.
nlohmann::json parse_json_text(const std::string& text, const std::string& source);
nlohmann::json read_json_file(const std::string& path);

void write_json_file(const std::string& path, const Json& j);

}  // namespace surveyel
