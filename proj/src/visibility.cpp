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

#include "surveyel/visibility.hpp"

#include <algorithm>

#include "surveyel/error.hpp"
#include "surveyel/glm.hpp"

namespace surveyel {

std::string to_string(VisibilityMode mode) {
    switch (mode) {
        case VisibilityMode::kGivenPi: return "given-pi";
        case VisibilityMode::kGammaRegression: return "gamma-regression";
        case VisibilityMode::kSupplied: return "supplied";
    }
    return "?";
}

VisibilityModel visibility_from_pi(const Dataset& data) {
    if (!data.pi()) {
        throw InputError("visibility", "visibility_from_pi", "inclusion probabilities are absent");
    }
    const VectorXd& p = *data.pi();
    for (Index i = 0; i < p.size(); ++i) {
        if (!(p(i) > 0.0)) {
            throw InputError("visibility", "visibility_from_pi",
                             "nonpositive inclusion probability at row " + std::to_string(i + 1));
        }
    }
    VisibilityModel vm;
    vm.mode = VisibilityMode::kGivenPi;
    vm.bp = p;
    return vm;
}

VisibilityModel visibility_from_values(const VectorXd& bp) {
    if (bp.size() == 0 || !bp.allFinite() || (bp.array() <= 0.0).any()) {
        throw InputError("visibility", "visibility_from_values",
                         "conditional visibilities must be finite and strictly positive");
    }
    VisibilityModel vm;
    vm.mode = VisibilityMode::kSupplied;
    vm.bp = bp;
    return vm;
}

namespace {

MatrixXd formula_matrix(const Dataset& data, const std::vector<std::string>& formula, bool intercept) {
    ModelSpec m;
    m.terms = formula;
    m.intercept = intercept;
    return design_matrix(m, data);
}

}  // namespace

VisibilityModel estimate_visibility(const Dataset& data, const VisibilityOptions& opt) {
    const char* op = "estimate_visibility";
    if (data.schema().weight_source.empty()) {
        throw InputError("visibility", op, "no weight source is tagged");
    }
    std::vector<std::string> formula = opt.formula;
    if (formula.empty() && opt.use_default_formula) {
        formula = data.schema().covariates;
        for (const auto& z : data.schema().design) {
            if (std::find(formula.begin(), formula.end(), z) == formula.end()) formula.push_back(z);
        }
    }
    for (const auto& c : formula) {
        if (!data.has_column(c)) {
            throw InputError("visibility", op, "formula column '" + c + "' not found");
        }
    }
    VectorXd nf = VectorXd::Ones(data.n());
    if (!opt.family_size_column.empty()) {
        if (!data.has_column(opt.family_size_column)) {
            throw InputError("visibility", op,
                             "family-size column '" + opt.family_size_column + "' not found");
        }
        nf = data.column(opt.family_size_column);
        if ((nf.array() <= 0.0).any()) {
            throw InputError("visibility", op, "family sizes must be positive");
        }
    }

    VisibilityModel vm;
    vm.mode = VisibilityMode::kGammaRegression;
    vm.formula = formula;
    vm.intercept = opt.intercept;
    const MatrixXd X = formula_matrix(data, formula, opt.intercept);
    VectorXd fitted;
    try {
        if (opt.order == FamilySizeOrder::kOriginal && !opt.family_size_column.empty()) {
            if (opt.original == nullptr) {
                throw InputError("visibility", op, "original-order adjustment needs the original dataset");
            }
            const Dataset& orig = *opt.original;
            const MatrixXd Xo = formula_matrix(orig, formula, opt.intercept);
            const VectorXd resp = orig.raw_weight();
            IrlsResult fit = irls_fit(Family::kGammaInverse, resp, Xo, VectorXd::Ones(orig.n()));
            vm.alpha = fit.coef;
            vm.deviance = fit.deviance;
            vm.dispersion = fit.dispersion;
            vm.iterations = fit.iterations;
            fitted = (X * fit.coef).cwiseInverse().array() * nf.array();
        } else {
            const VectorXd resp = data.raw_weight().array() / nf.array();
            IrlsResult fit = irls_fit(Family::kGammaInverse, resp, X, VectorXd::Ones(data.n()));
            vm.alpha = fit.coef;
            vm.deviance = fit.deviance;
            vm.dispersion = fit.dispersion;
            vm.iterations = fit.iterations;
            fitted = fit.fitted.array() * nf.array();
        }
    } catch (const InputError&) {
        throw;
    } catch (const Error& e) {
        throw NumericalError("visibility", op, std::string("weight model fit failed: ") + e.what());
    }
    if (!fitted.allFinite() || (fitted.array() <= 0.0).any()) {
        throw NumericalError("visibility", op, "nonpositive fitted inverse-probability weight");
    }
    vm.bp = fitted.cwiseInverse();
    return vm;
}

}  // namespace surveyel
