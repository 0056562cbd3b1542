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

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "surveyel/constraints.hpp"
#include "surveyel/el.hpp"
#include "surveyel/glm.hpp"
#include "surveyel/visibility.hpp"

namespace surveyel {

enum class Estimator { kCE, kCS, kPL };

Estimator parse_estimator(const std::string& s);
std::string to_string(Estimator e);

// Which reading of the plug-in covariance sums is used.
//   kStackedMoments: sample moments of the stacked estimating system, Cov = V / n.
//   kDisplayLiteral: the weighted sums exactly as displayed, Cov = V.
enum class PlugInRule { kStackedMoments, kDisplayLiteral };

PlugInRule parse_plugin_rule(const std::string& s);
std::string to_string(PlugInRule r);

struct NewtonOptions {
    double tolerance = 1e-10;  // weighted-score max-norm
    int max_iterations = 100;
    int max_halvings = 50;
    double divergence_bound = 1e3;
    int starts = 3;  // 1 disables the multistart diagnostic
    double jitter = 0.05;
};

struct NewtonResult {
    VectorXd theta;
    int iterations = 0;
    double score_norm = 0.0;
    bool converged = false;
    bool starts_agree = true;
    double start_spread = 0.0;  // max |theta_k - theta| over the jittered starts
    int starts_failed = 0;
};

// Root of sum_i w_i psi_theta(y_i, a_i) = 0 by damped Newton. Throws
// ConvergenceError on divergence (including separation) and NumericalError on a
// singular Jacobian. If theta0 already satisfies the tolerance it is returned
// unchanged.
NewtonResult newton_solve_score(Family family, const MatrixXd& X, const VectorXd& y,
                                const VectorXd& w, const VectorXd& theta0,
                                const NewtonOptions& options = {});
NewtonResult newton_solve_score(const VectorXd& w, const ModelSpec& model, const Dataset& data,
                                const std::optional<VectorXd>& theta0 = std::nullopt,
                                const NewtonOptions& options = {});

struct FitOptions {
    ELOptions el;
    NewtonOptions newton;
    PlugInRule rule = PlugInRule::kStackedMoments;
    bool compute_covariance = true;
    std::optional<VectorXd> theta0;  // step-2 start; defaults to the PL estimate
};

struct Diagnostics {
    int el_iterations = 0;
    bool el_converged = true;
    double el_residual = 0.0;
    bool restriction_binding = false;
    int newton_iterations = 0;
    bool newton_converged = false;
    double score_norm = std::numeric_limits<double>::quiet_NaN();
    bool starts_agree = true;
    double start_spread = 0.0;
    int infeasible_evaluations = 0;  // joint profile only
    int outer_iterations = 0;        // joint profile only
    std::string failure;             // empty when converged
    std::vector<std::string> warnings;
};

struct EstimateResult {
    Estimator estimator = Estimator::kPL;
    std::vector<std::string> coefficient_names;
    std::vector<std::string> constraint_labels;
    VectorXd theta;
    MatrixXd covariance;
    VectorXd se;
    VectorXd weights;       // w_CE, w_CS, or d for PL
    VectorXd step1_weights; // Owen-form w* for CE; equals weights otherwise
    VectorXd multiplier;    // kappa (CE) or lambda (CS)
    double bp_hat = std::numeric_limits<double>::quiet_NaN();  // CE only
    double log_el = std::numeric_limits<double>::quiet_NaN();
    VectorXd constraint_residuals;  // sum_i w_i h_i
    bool converged = false;
    Diagnostics diagnostics;
};

EstimateResult fit_pl(const Dataset& data, const ModelSpec& model, const FitOptions& options = {});
EstimateResult fit_cs(const Dataset& data, const ModelSpec& model, const ConstraintMatrix& constraints,
                      const FitOptions& options = {});
EstimateResult fit_ce(const Dataset& data, const ModelSpec& model, const ConstraintMatrix& constraints,
                      const VisibilityModel& vis, const FitOptions& options = {});

// Quasi-Newton maximization over theta of the EL profile with stacked columns
// [psi_theta / bp ; h / bp]. Starts at the two-step estimate unless a start is given.
struct ProfileOptions {
    FitOptions fit;
    std::optional<VectorXd> start;
    int max_iterations = 200;
    double gradient_tolerance = 1e-9;  // on the gradient divided by n
};

EstimateResult profile_fit_joint(const Dataset& data, const ModelSpec& model,
                                 const ConstraintMatrix& constraints, const VisibilityModel& vis,
                                 const ProfileOptions& options = {});

// Profile log-EL at theta (sum of log Owen weights); throws InfeasibleError when
// theta leaves the feasible region.
double profile_log_el(const Dataset& data, const ModelSpec& model, const ConstraintMatrix& constraints,
                      const VisibilityModel& vis, const VectorXd& theta, VectorXd* gradient = nullptr,
                      const ELOptions& options = {});

}  // namespace surveyel
