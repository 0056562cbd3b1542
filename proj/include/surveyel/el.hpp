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

#include <vector>

#include "surveyel/dataset.hpp"

namespace surveyel {

struct ELOptions {
    double tolerance = 1e-10;  // dual gradient max-norm
    int max_iterations = 200;
    double armijo = 1e-4;
    int max_halvings = 60;
};

struct ELSolution {
    VectorXd w;           // on the open simplex
    VectorXd multiplier;  // lambda (Owen form) or kappa (visibility dual)
    double log_el = 0.0;  // value of the maximized primal objective
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;  // max_k |sum_i w_i U_ik|
    std::vector<double> trace;  // dual objective per accepted iterate, starting at the origin
    bool restriction_binding = false;  // dual_minimize_kappa only
};

// max sum_i log w_i  s.t. w on the simplex, sum_i w_i U_i = 0.
ELSolution solve_el(const MatrixXd& U, const ELOptions& options = {});

// max sum_i d_i log w_i  s.t. w on the simplex, sum_i w_i U_i = 0.
// Solution w_i = d_i / (1 + lambda^T U_i).
ELSolution solve_weighted_el(const MatrixXd& U, const VectorXd& d, const ELOptions& options = {});

// Minimizes -sum_i log(bp_i + kappa^T h_i) directly, with w_i proportional to
// 1/(bp_i + kappa^T h_i). log_el is sum log w - n log(sum bp w).
ELSolution dual_minimize_kappa(const MatrixXd& H, const VectorXd& bp, const ELOptions& options = {});

}  // namespace surveyel
