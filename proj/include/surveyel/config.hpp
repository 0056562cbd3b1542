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
#include <vector>

#include "surveyel/constraints.hpp"
#include "surveyel/dataset.hpp"
#include "surveyel/estimators.hpp"
#include "surveyel/glm.hpp"
#include "surveyel/simulate.hpp"
#include "surveyel/visibility.hpp"

namespace surveyel {

struct DataConfig {
    std::string path;  // resolved against the config file's directory
    Schema schema;
};

struct VisibilityConfig {
    VisibilityMode mode = VisibilityMode::kGivenPi;
    std::vector<std::string> formula;  // empty = covariates then design columns
    bool intercept = true;
    std::string column;               // kSupplied: column holding bp
    bool nf_adjust = false;
    std::string family_size_column = "n_f";
    FamilySizeOrder order = FamilySizeOrder::kDeclustered;
    std::string original_path;        // kOriginal: pre-de-clustering CSV
};

enum class CeMethod { kTwoStep, kJoint };

struct MonteCarloConfig {
    int reps = 100;
    int jobs = 1;
    VisibilitySource visibility = VisibilitySource::kGivenPi;
    std::vector<std::string> visibility_formula;
    std::optional<VectorXd> theta_true;  // length checked against the model
    bool fixed_population = false;
    bool write_replicates = false;
};

struct OutputConfig {
    std::string path = "surveyel_out";  // directory
    std::string format = "json+csv";    // json+csv | json | csv
};

struct RunConfig {
    std::string source;  // config path, for messages
    std::optional<DataConfig> data;
    std::optional<ModelSpec> model;
    ConstraintSpec constraints;
    VisibilityConfig visibility;
    std::vector<Estimator> estimators;
    CeMethod ce_method = CeMethod::kTwoStep;
    FitOptions fit;
    int profile_max_iterations = 200;
    double profile_gradient_tolerance = 1e-9;
    std::optional<std::uint64_t> seed;
    OutputConfig output;
    std::optional<DesignSpec> simulation;
    MonteCarloConfig mc;
};

// Strict parse: unknown keys, wrong types and references to absent columns are
// InputErrors raised before any computation.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& source, const std::string& base_dir);

// First line of a CSV file, split on commas.
std::vector<std::string> read_csv_header(const std::string& path);

// Column names a simulated population will carry.
std::vector<std::string> design_column_names(const DesignSpec& spec);

}  // namespace surveyel
