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

enum class Family { kBernoulliLogit, kGammaInverse, kGaussianIdentity };

Family parse_family(const std::string& s);
std::string to_string(Family family);

struct ModelSpec {
    Family family = Family::kBernoulliLogit;
    std::vector<std::string> terms;
    bool intercept = true;

    Index p() const { return static_cast<Index>(terms.size()) + (intercept ? 1 : 0); }
    // "(intercept)" first when requested, then the terms in order.
    std::vector<std::string> coefficient_names() const;
};

inline constexpr const char* kInterceptName = "(intercept)";

// n x p design matrix; the intercept is an explicit column of ones.
MatrixXd design_matrix(const ModelSpec& model, const Dataset& data);

double expit(double x);

// Inverse link evaluated at the linear predictor.
VectorXd mean_function(Family family, const VectorXd& eta);

// Every supported family has psi'(y, a, theta) = -c_i a_i a_i^T. Returns c.
VectorXd jacobian_scale(Family family, const VectorXd& eta);

// Rows psi(y_i, a_i, theta).
MatrixXd score(Family family, const VectorXd& theta, const MatrixXd& X, const VectorXd& y);
MatrixXd score(const ModelSpec& model, const VectorXd& theta, const Dataset& data);

// sum_i w_i psi_i
VectorXd weighted_score(Family family, const VectorXd& theta, const MatrixXd& X,
                        const VectorXd& y, const VectorXd& w);

// sum_i w_i psi'_i
MatrixXd score_jacobian(Family family, const VectorXd& theta, const MatrixXd& X,
                        const VectorXd& y, const VectorXd& w);
MatrixXd score_jacobian(const ModelSpec& model, const VectorXd& theta, const Dataset& data,
                        const VectorXd& w);

struct IrlsOptions {
    double tolerance = 1e-10;
    int max_iterations = 100;
    int max_halvings = 50;
    double separation_bound = 1e3;
};

struct IrlsResult {
    VectorXd coef;
    VectorXd fitted;  // inverse link of X coef
    double deviance = 0.0;
    double dispersion = 1.0;  // Pearson estimate; reported only
    int iterations = 0;
    bool converged = false;
};

// Weighted GLM maximum likelihood. Throws on rank deficiency, on failure to
// keep Gamma means positive, and on non-convergence.
IrlsResult irls_fit(Family family, const VectorXd& y, const MatrixXd& X,
                    const VectorXd& case_weights, const IrlsOptions& options = {});

}  // namespace surveyel
