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

#include <Eigen/Core>

namespace surveyel::detail {

// Inverse through a column-pivoted QR. Throws NumericalError when the matrix is
// numerically singular; appends a warning when the condition number exceeds 1e12.
Eigen::MatrixXd robust_inverse(const Eigen::MatrixXd& A, const std::string& module,
                               const std::string& operation, const std::string& name,
                               std::vector<std::string>* warnings = nullptr);

Eigen::VectorXd robust_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                             const std::string& module, const std::string& operation,
                             const std::string& name);

double condition_number(const Eigen::MatrixXd& A);

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& M) { return 0.5 * (M + M.transpose()); }

}  // namespace surveyel::detail
