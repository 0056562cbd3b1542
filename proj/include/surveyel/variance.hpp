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

#include "surveyel/estimators.hpp"

namespace surveyel {

// Roman blocks feed the CS and PL sandwiches, calligraphic blocks the CE sandwich.
struct CovarianceComponents {
    PlugInRule rule = PlugInRule::kStackedMoments;
    Index n = 0;
    MatrixXd G, Gstar, K1, K2, H1, H2;  // p x p, p x p, p x q, p x q, q x q, q x q
    MatrixXd calG, calGstar, calK2, calH2;
    bool has_roman = false;
    bool has_calligraphic = false;
    mutable std::vector<std::string> warnings;
};

// Per-observation quantities at the fitted values. psi'_i = -c_i x_i x_i^T.
struct ComponentInputs {
    MatrixXd psi;         // n x p
    MatrixXd X;           // n x p
    VectorXd c;           // n
    MatrixXd H;           // n x q, vacuous columns removed
    VectorXd d;           // design weights, sum to one
    VectorXd w;           // fitted EL weights (w_CS for Roman, w_CE for calligraphic)
    VectorXd bp;          // calligraphic only
};

CovarianceComponents roman_components(const ComponentInputs& in, PlugInRule rule);
CovarianceComponents calligraphic_components(const ComponentInputs& in, PlugInRule rule);

// Components for a finished fit: Roman for CS and PL, calligraphic for CE.
CovarianceComponents covariance_components(const EstimateResult& fit, const Dataset& data,
                                           const ModelSpec& model, const ConstraintMatrix& constraints,
                                           const VisibilityModel* vis, PlugInRule rule);

// Sandwich matrices before the sample-size normalization.
MatrixXd sandwich_pl(const CovarianceComponents& c);
MatrixXd sandwich_cs(const CovarianceComponents& c);
MatrixXd sandwich_ce(const CovarianceComponents& c);
// G^-1 (G* - K2 H2^-1 K2^T) G^-T, the CS form under asymptotic independence.
MatrixXd sandwich_cs_independent(const CovarianceComponents& c);
// (K2 H2^-1 - K1 H1^-1) H2 (K2 H2^-1 - K1 H1^-1)^T
MatrixXd theorem4_factor(const CovarianceComponents& c);

// Covariance of theta-hat, symmetrized. Divides by n under kStackedMoments.
MatrixXd assemble_covariance(CovarianceComponents& components, Estimator estimator);

struct EfficiencyGap {
    MatrixXd gap;  // Vcs - Vce
    double min_eigenvalue = 0.0;
};

EfficiencyGap efficiency_gap(const MatrixXd& Vcs, const MatrixXd& Vce);

}  // namespace surveyel
