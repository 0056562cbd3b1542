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

#include <cmath>

#include "surveyel/error.hpp"
#include "surveyel/estimators.hpp"
#include "surveyel/log.hpp"
#include "surveyel/variance.hpp"
#include "format.hpp"

namespace surveyel {
namespace {

constexpr const char* kModule = "estimators";

struct ProfilePoint {
    double log_el = 0.0;
    VectorXd gradient;
    ELSolution el;
};

ProfilePoint evaluate(const MatrixXd& X, const VectorXd& y, Family family, const MatrixXd& Hs,
                      const VectorXd& bp, const VectorXd& theta, const ELOptions& opt) {
    const Index n = X.rows();
    const Index p = X.cols();
    const MatrixXd psi = score(family, theta, X, y);
    MatrixXd U(n, p + Hs.cols());
    U.leftCols(p) = psi.array().colwise() / bp.array();
    U.rightCols(Hs.cols()) = Hs;
    ProfilePoint pt;
    pt.el = solve_el(U, opt);
    pt.log_el = pt.el.log_el;
    // Envelope theorem: d/dtheta sum log w = -n sum_i (w_i / bp_i) psi'_i lambda_psi.
    const VectorXd lam = pt.el.multiplier.head(p);
    const VectorXd c = jacobian_scale(family, X * theta);
    const VectorXd s = static_cast<double>(n) * pt.el.w.array() * c.array() / bp.array() *
                       (X * lam).array();
    pt.gradient = X.transpose() * s;
    return pt;
}

}  // namespace

double profile_log_el(const Dataset& data, const ModelSpec& model, const ConstraintMatrix& cm,
                      const VisibilityModel& vis, const VectorXd& theta, VectorXd* gradient,
                      const ELOptions& options) {
    const MatrixXd X = design_matrix(model, data);
    const MatrixXd Hs = cm.active().array().colwise() / vis.bp.array();
    ProfilePoint pt = evaluate(X, data.y(), model.family, Hs, vis.bp, theta, options);
    if (gradient) *gradient = pt.gradient;
    return pt.log_el;
}

EstimateResult profile_fit_joint(const Dataset& data, const ModelSpec& model, const ConstraintMatrix& cm,
                                 const VisibilityModel& vis, const ProfileOptions& opt) {
    const char* op = "profile_fit_joint";
    if (vis.bp.size() != data.n() || cm.n() != data.n()) {
        throw InputError(kModule, op, "visibility or constraint rows do not match the dataset");
    }
    const MatrixXd X = design_matrix(model, data);
    const VectorXd& y = data.y();
    const MatrixXd Hs = cm.active().array().colwise() / vis.bp.array();
    const double n = static_cast<double>(data.n());

    VectorXd theta;
    if (opt.start) {
        theta = *opt.start;
    } else {
        FitOptions two = opt.fit;
        two.compute_covariance = false;
        EstimateResult ts = fit_ce(data, model, cm, vis, two);
        if (ts.converged) {
            theta = ts.theta;
        } else {
            log::info("estimators/profile_fit_joint: two-step start unavailable, using the PL estimate");
            FitOptions pl_opt = two;
            pl_opt.newton.starts = 1;
            EstimateResult pl = fit_pl(data, model, pl_opt);
            if (!pl.converged) {
                throw ConvergenceError(kModule, op, "no start value: " + pl.diagnostics.failure);
            }
            theta = pl.theta;
        }
    }
    if (theta.size() != model.p()) {
        throw InputError(kModule, op, "start value has the wrong dimension");
    }

    ProfilePoint cur = evaluate(X, y, model.family, Hs, vis.bp, theta, opt.fit.el);  // throws if infeasible
    double f = -cur.log_el;
    VectorXd g = -cur.gradient;
    MatrixXd Hinv = MatrixXd::Identity(theta.size(), theta.size());
    int infeasible = 0;
    int iterations = 0;
    bool converged = false;
    for (int it = 0; it < opt.max_iterations; ++it) {
        if (g.cwiseAbs().maxCoeff() / n < opt.gradient_tolerance) {
            converged = true;
            break;
        }
        VectorXd dir = -Hinv * g;
        if (!(g.dot(dir) < 0)) {
            Hinv.setIdentity();
            dir = -g;
        }
        double t = 1.0;
        bool accepted = false;
        ProfilePoint trial;
        VectorXd trial_theta;
        for (int h = 0; h < 60; ++h, t *= 0.5) {
            trial_theta = theta + t * dir;
            try {
                trial = evaluate(X, y, model.family, Hs, vis.bp, trial_theta, opt.fit.el);
            } catch (const InfeasibleError&) {
                ++infeasible;
                continue;
            } catch (const ConvergenceError&) {
                ++infeasible;
                continue;
            } catch (const NumericalError&) {
                ++infeasible;
                continue;
            }
            if (-trial.log_el <= f + 1e-4 * t * g.dot(dir)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // No descent left at working precision.
            converged = g.cwiseAbs().maxCoeff() / n < 1e3 * opt.gradient_tolerance;
            break;
        }
        const VectorXd s = trial_theta - theta;
        const VectorXd g_new = -trial.gradient;
        const VectorXd yk = g_new - g;
        const double sy = s.dot(yk);
        if (sy > 1e-12 * s.norm() * yk.norm()) {
            if (it == 0) {
                Hinv *= sy / yk.squaredNorm();
            }
            const double rho = 1.0 / sy;
            const MatrixXd I = MatrixXd::Identity(theta.size(), theta.size());
            Hinv = (I - rho * s * yk.transpose()) * Hinv * (I - rho * yk * s.transpose()) +
                   rho * s * s.transpose();
        }
        theta = trial_theta;
        cur = trial;
        f = -cur.log_el;
        g = g_new;
        iterations = it + 1;
    }
    if (infeasible > 0) {
        log::debug("estimators/profile_fit_joint: " + std::to_string(infeasible) +
                   " infeasible trial points during the outer search");
    }

    EstimateResult r;
    r.estimator = Estimator::kCE;
    r.coefficient_names = model.coefficient_names();
    r.constraint_labels = cm.labels;
    r.theta = theta;
    const VectorXd ratio = cur.el.w.array() / vis.bp.array();
    r.step1_weights = cur.el.w;
    r.weights = ratio / ratio.sum();
    r.bp_hat = 1.0 / ratio.sum();
    // Map the multiplier for the active constraint columns back to all q columns.
    r.multiplier = VectorXd::Zero(cm.q());
    for (Index k = 0, j = 0; k < cm.q(); ++k) {
        if (!cm.vacuous[static_cast<std::size_t>(k)]) {
            r.multiplier(k) = cur.el.multiplier(model.p() + j++);
        }
    }
    r.log_el = r.weights.array().log().sum() - n * std::log(r.bp_hat);
    r.constraint_residuals = cm.H.transpose() * r.weights;
    r.diagnostics.el_iterations = cur.el.iterations;
    r.diagnostics.el_converged = cur.el.converged;
    r.diagnostics.el_residual = cur.el.residual;
    r.diagnostics.outer_iterations = iterations;
    r.diagnostics.infeasible_evaluations = infeasible;
    r.diagnostics.score_norm = weighted_score(model.family, theta, X, y, r.weights).cwiseAbs().maxCoeff();
    r.diagnostics.newton_converged = converged;
    r.converged = converged;
    r.se = VectorXd::Constant(model.p(), std::numeric_limits<double>::quiet_NaN());
    r.covariance = MatrixXd::Constant(model.p(), model.p(), std::numeric_limits<double>::quiet_NaN());
    if (!converged) {
        r.diagnostics.failure = "outer quasi-Newton search did not converge";
        return r;
    }
    if (opt.fit.compute_covariance) {
        try {
            CovarianceComponents comp = covariance_components(r, data, model, cm, &vis, opt.fit.rule);
            r.covariance = assemble_covariance(comp, Estimator::kCE);
            r.se = r.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
        } catch (const Error& e) {
            r.diagnostics.warnings.push_back(e.what());
        }
    }
    return r;
}

}  // namespace surveyel
