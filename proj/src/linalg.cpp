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

#include "linalg.hpp"

#include <cmath>
#include <limits>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "surveyel/error.hpp"
#include "surveyel/log.hpp"
#include "format.hpp"

namespace surveyel::detail {

double condition_number(const Eigen::MatrixXd& A) {
    if (A.size() == 0) return 1.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) <= 0) return std::numeric_limits<double>::infinity();
    return s(0) / s(s.size() - 1);
}

namespace {

void check(const Eigen::MatrixXd& A, const std::string& module, const std::string& operation,
           const std::string& name, std::vector<std::string>* warnings) {
    if (A.rows() != A.cols()) {
        throw InputError(module, operation, name + " is not square");
    }
    if (!A.allFinite()) {
        throw NumericalError(module, operation, name + " has nonfinite entries");
    }
    const double cond = condition_number(A);
    if (!(cond < 1e15)) {
        throw NumericalError(module, operation, name + " is singular (condition number " +
                                                    fmt17(cond) + ")");
    }
    if (cond > 1e12) {
        const std::string msg = name + " is ill-conditioned (condition number " + fmt17(cond) + ")";
        if (warnings) warnings->push_back(msg);
        log::warn(module + "/" + operation + ": " + msg);
    }
}

}  // namespace

Eigen::MatrixXd robust_inverse(const Eigen::MatrixXd& A, const std::string& module,
                               const std::string& operation, const std::string& name,
                               std::vector<std::string>* warnings) {
    if (A.size() == 0) return A;
    check(A, module, operation, name, warnings);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    return qr.inverse();
}

Eigen::VectorXd robust_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                             const std::string& module, const std::string& operation,
                             const std::string& name) {
    check(A, module, operation, name, nullptr);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    return qr.solve(b);
}

}  // namespace surveyel::detail
