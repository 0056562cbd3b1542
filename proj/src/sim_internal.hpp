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
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "surveyel/dataset.hpp"
#include "surveyel/simulate.hpp"

namespace surveyel::detail {

// Growing column store shared by population generation and the expectation grid.
struct Columns {
    std::vector<std::string> names;
    std::vector<Eigen::VectorXd> cols;

    Eigen::Index rows() const { return cols.empty() ? rows_hint : cols.front().size(); }
    Eigen::Index rows_hint = 0;
    bool has(const std::string& name) const;
    const Eigen::VectorXd& get(const std::string& name) const;
    void set(const std::string& name, Eigen::VectorXd values);
    // Repeat every row `times` times in place (row-major blocks).
    void repeat_rows(Eigen::Index times);
};

Eigen::VectorXd eval_linear(const LinearTerm& term, const Columns& cols);
void apply_derived(const DerivedSpec& spec, Columns& cols);
Eigen::VectorXd poisson_pi(const PoissonDesignSpec& spec, const Eigen::VectorXd& eta,
                           const Eigen::VectorXd& latent);

// Probabilists' Gauss-Hermite (weights sum to one) and Gauss-Legendre on [lo, hi].
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_hermite(int nodes);
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int nodes, double lo, double hi);

}  // namespace surveyel::detail
