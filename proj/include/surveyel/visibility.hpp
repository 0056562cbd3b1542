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
#include <vector>

#include "surveyel/dataset.hpp"

namespace surveyel {

enum class VisibilityMode { kGivenPi, kGammaRegression, kSupplied };

std::string to_string(VisibilityMode mode);

// Conditional visibility bp_i = E_P[pi_i | V_i], reported up to positive scale.
struct VisibilityModel {
    VisibilityMode mode = VisibilityMode::kGivenPi;
    VectorXd bp;
    VectorXd alpha;  // weight-model coefficients (gamma regression only)
    std::vector<std::string> formula;
    bool intercept = true;
    double deviance = 0.0;
    double dispersion = 0.0;
    int iterations = 0;
};

VisibilityModel visibility_from_pi(const Dataset& data);
VisibilityModel visibility_from_values(const VectorXd& bp);

// Where the family-size adjustment is applied.
//   kDeclustered: regress d_i / n_f on the de-clustered rows, multiply fitted by n_f.
//   kOriginal:    regress d on the original (pre-de-clustering) rows, evaluate the
//                 fitted model on the de-clustered rows, multiply by n_f.
enum class FamilySizeOrder { kDeclustered, kOriginal };

struct VisibilityOptions {
    // Empty means all covariates followed by all design columns of the schema.
    std::vector<std::string> formula;
    bool use_default_formula = true;
    bool intercept = true;
    std::string family_size_column;  // empty disables the n_f adjustment
    FamilySizeOrder order = FamilySizeOrder::kDeclustered;
    const Dataset* original = nullptr;  // required for kOriginal
};

// Gamma regression with inverse link of the inverse-probability weight on the
// formula columns; bp_i is the reciprocal of the fitted mean.
VisibilityModel estimate_visibility(const Dataset& data, const VisibilityOptions& options = {});

}  // namespace surveyel
