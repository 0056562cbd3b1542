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

#include "surveyel/estimators.hpp"

#include <cmath>

#include "surveyel/error.hpp"
#include "surveyel/log.hpp"
#include "surveyel/variance.hpp"
#include "linalg.hpp"
#include "format.hpp"

namespace surveyel {
namespace {

constexpr const char* kModule = "estimators";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

Estimator parse_estimator(const std::string& s) {
    if (s == "CE" || s == "ce") return Estimator::kCE;
    if (s == "CS" || s == "cs") return Estimator::kCS;
    if (s == "PL" || s == "pl") return Estimator::kPL;
    throw InputError(kModule, "parse_estimator", "unknown estimator '" + s + "'");
}

std::string to_string(Estimator e) {
    switch (e) {
        case Estimator::kCE: return "CE";
        case Estimator::kCS: return "CS";
        case Estimator::kPL: return "PL";
    }
    return "?";
}

PlugInRule parse_plugin_rule(const std::string& s) {
    if (s == "stacked-moments") return PlugInRule::kStackedMoments;
    if (s == "display-literal") return PlugInRule::kDisplayLiteral;
    throw InputError("variance", "parse_plugin_rule", "unknown plug-in rule '" + s + "'");
}

std::string to_string(PlugInRule r) {
    return r == PlugInRule::kStackedMoments ? "stacked-moments" : "display-literal";
}

namespace {

struct SingleRun {
    VectorXd theta;
    int iterations = 0;
    double score_norm = 0.0;
};

SingleRun newton_single(Family family, const MatrixXd& X, const VectorXd& y, const VectorXd& w,
                        const VectorXd& theta0, const NewtonOptions& opt) {
    const char* op = "newton_solve_score";
    SingleRun run;
    VectorXd theta = theta0;
    VectorXd s = weighted_score(family, theta, X, y, w);
    double smax = s.cwiseAbs().maxCoeff();
    if (smax < opt.tolerance) {
        run.theta = theta;
        run.score_norm = smax;
        return run;
    }
    auto step_at = [&](const VectorXd& th, const VectorXd& sc) {
        const MatrixXd J = score_jacobian(family, th, X, y, w);
        return VectorXd(-detail::robust_solve(J, sc, kModule, op, "score Jacobian"));
    };
    bool done = false;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const VectorXd step = step_at(theta, s);
        double t = 1.0;
        VectorXd cand;
        VectorXd s_new;
        const double norm_old = s.norm();
        bool accepted = false;
        for (int h = 0; h <= opt.max_halvings; ++h, t *= 0.5) {
            cand = theta + t * step;
            try {
                s_new = weighted_score(family, cand, X, y, w);
            } catch (const NumericalError&) {
                continue;
            }
            if (family == Family::kGammaInverse && ((X * cand).array() <= 0).any()) continue;
            if (s_new.allFinite() && s_new.norm() < norm_old) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            throw ConvergenceError(kModule, op,
                                   "step halving failed to reduce the score norm (" + fmt17(norm_old) + ")");
        }
        theta = cand;
        s = s_new;
        run.iterations = it;
        if (theta.norm() > opt.divergence_bound) {
            throw ConvergenceError(kModule, op, "divergence: |theta| exceeds " + fmt17(opt.divergence_bound) +
                                                    " (possible separation)");
        }
        smax = s.cwiseAbs().maxCoeff();
        if (smax < opt.tolerance) {
            done = true;
            break;
        }
    }
    if (!done) {
        throw ConvergenceError(kModule, op, "no convergence after " + std::to_string(opt.max_iterations) +
                                                " iterations (score " + fmt17(smax) + ")");
    }
    // A genuine root gives a negligible next step; a vanishing score with a
    // persistent step means the root is at infinity.
    const VectorXd last = step_at(theta, s);
    if (last.norm() > 1e-4 * (1.0 + theta.norm())) {
        throw ConvergenceError(kModule, op, "divergence: score vanishes without a finite root (separation)");
    }
    VectorXd polished = theta + last;
    try {
        VectorXd sp = weighted_score(family, polished, X, y, w);
        if (sp.allFinite() && sp.cwiseAbs().maxCoeff() <= smax) {
            theta = polished;
            smax = sp.cwiseAbs().maxCoeff();
        }
    } catch (const NumericalError&) {
    }
    run.theta = theta;
    run.score_norm = smax;
    return run;
}

}  // namespace

NewtonResult newton_solve_score(Family family, const MatrixXd& X, const VectorXd& y, const VectorXd& w,
                                const VectorXd& theta0, const NewtonOptions& opt) {
    if (theta0.size() != X.cols()) {
        throw InputError(kModule, "newton_solve_score", "start value has the wrong dimension");
    }
    SingleRun main = newton_single(family, X, y, w, theta0, opt);
    NewtonResult res;
    res.theta = main.theta;
    res.iterations = main.iterations;
    res.score_norm = main.score_norm;
    res.converged = true;
    // Deterministic jittered restarts; disagreement flags a non-unique root.
    for (int k = 1; k < opt.starts; ++k) {
        VectorXd start = theta0;
        for (Index j = 0; j < start.size(); ++j) {
            const double sign = ((j + k) % 2 == 0) ? 1.0 : -1.0;
            start(j) += sign * opt.jitter * k * (1.0 + std::abs(theta0(j)));
        }
        try {
            SingleRun alt = newton_single(family, X, y, w, start, opt);
            const double diff = (alt.theta - res.theta).cwiseAbs().maxCoeff();
            res.start_spread = std::max(res.start_spread, diff);
        } catch (const Error&) {
            ++res.starts_failed;
        }
    }
    res.starts_agree = res.start_spread < 1e-6 * (1.0 + res.theta.cwiseAbs().maxCoeff());
    if (!res.starts_agree) {
        log::info("estimators/newton_solve_score: jittered starts disagree by " + fmt17(res.start_spread));
    }
    return res;
}

NewtonResult newton_solve_score(const VectorXd& w, const ModelSpec& model, const Dataset& data,
                                const std::optional<VectorXd>& theta0, const NewtonOptions& opt) {
    const MatrixXd X = design_matrix(model, data);
    VectorXd start;
    if (theta0) {
        start = *theta0;
    } else {
        start = irls_fit(model.family, data.y(), X, data.d()).coef;
    }
    return newton_solve_score(model.family, X, data.y(), w, start, opt);
}

namespace {

EstimateResult base_result(Estimator e, const ModelSpec& model, const ConstraintMatrix* cm) {
    EstimateResult r;
    r.estimator = e;
    r.coefficient_names = model.coefficient_names();
    if (cm) r.constraint_labels = cm->labels;
    r.theta = VectorXd::Constant(model.p(), kNaN);
    r.se = VectorXd::Constant(model.p(), kNaN);
    r.covariance = MatrixXd::Constant(model.p(), model.p(), kNaN);
    return r;
}

// Step 2 and the covariance; leaves the non-converged flag on failure.
void finish(EstimateResult& r, const Dataset& data, const ModelSpec& model, const ConstraintMatrix& cm,
            const VisibilityModel* vis, const FitOptions& opt, const VectorXd& start) {
    const MatrixXd X = design_matrix(model, data);
    try {
        NewtonResult nr = newton_solve_score(model.family, X, data.y(), r.weights, start, opt.newton);
        r.theta = nr.theta;
        r.diagnostics.newton_iterations = nr.iterations;
        r.diagnostics.newton_converged = true;
        r.diagnostics.score_norm = nr.score_norm;
        r.diagnostics.starts_agree = nr.starts_agree;
        r.diagnostics.start_spread = nr.start_spread;
        r.converged = true;
    } catch (const ConvergenceError& e) {
        r.diagnostics.failure = e.what();
        r.converged = false;
        return;
    } catch (const NumericalError& e) {
        r.diagnostics.failure = e.what();
        r.converged = false;
        return;
    }
    if (opt.compute_covariance) {
        try {
            CovarianceComponents comp = covariance_components(r, data, model, cm, vis, opt.rule);
            r.covariance = assemble_covariance(comp, r.estimator);
            r.se = r.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
            r.diagnostics.warnings.insert(r.diagnostics.warnings.end(), comp.warnings.begin(),
                                          comp.warnings.end());
        } catch (const NumericalError& e) {
            r.diagnostics.warnings.push_back(e.what());
        }
    }
}

void check_constraints(const Dataset& data, const ConstraintMatrix& cm, const char* op) {
    if (cm.n() != data.n()) {
        throw InputError(kModule, op, "constraint matrix rows do not match the dataset");
    }
}

}  // namespace

EstimateResult fit_pl(const Dataset& data, const ModelSpec& model, const FitOptions& opt) {
    EstimateResult r = base_result(Estimator::kPL, model, nullptr);
    r.weights = data.d();
    r.step1_weights = data.d();
    r.multiplier = VectorXd(0);
    r.constraint_residuals = VectorXd(0);
    r.log_el = (data.d().array() * data.d().array().log()).sum();
    VectorXd start;
    if (opt.theta0) {
        start = *opt.theta0;
    } else {
        try {
            start = irls_fit(model.family, data.y(), design_matrix(model, data), data.d()).coef;
        } catch (const ConvergenceError& e) {
            r.diagnostics.failure = e.what();
            return r;
        }
    }
    finish(r, data, model, ConstraintMatrix::none(data.n()), nullptr, opt, start);
    return r;
}

namespace {

// PL start for step 2, or the caller's start.
std::optional<VectorXd> step2_start(const Dataset& data, const ModelSpec& model, const FitOptions& opt,
                                    std::string* failure) {
    if (opt.theta0) return opt.theta0;
    FitOptions pl_opt = opt;
    pl_opt.compute_covariance = false;
    pl_opt.newton.starts = 1;
    EstimateResult pl = fit_pl(data, model, pl_opt);
    if (!pl.converged) {
        *failure = "PL start failed: " + pl.diagnostics.failure;
        return std::nullopt;
    }
    return pl.theta;
}

}  // namespace

EstimateResult fit_cs(const Dataset& data, const ModelSpec& model, const ConstraintMatrix& cm,
                      const FitOptions& opt) {
    check_constraints(data, cm, "fit_cs");
    EstimateResult r = base_result(Estimator::kCS, model, &cm);
    ELSolution el = solve_weighted_el(cm.H, data.d(), opt.el);
    r.weights = el.w;
    r.step1_weights = el.w;
    r.multiplier = el.multiplier;
    r.log_el = el.log_el;
    r.constraint_residuals = cm.H.transpose() * el.w;
    r.diagnostics.el_iterations = el.iterations;
    r.diagnostics.el_converged = el.converged;
    r.diagnostics.el_residual = el.residual;
    std::string failure;
    auto start = step2_start(data, model, opt, &failure);
    if (!start) {
        r.diagnostics.failure = failure;
        return r;
    }
    finish(r, data, model, cm, nullptr, opt, *start);
    return r;
}

EstimateResult fit_ce(const Dataset& data, const ModelSpec& model, const ConstraintMatrix& cm,
                      const VisibilityModel& vis, const FitOptions& opt) {
    check_constraints(data, cm, "fit_ce");
    if (vis.bp.size() != data.n()) {
        throw InputError(kModule, "fit_ce", "visibility vector length does not match the dataset");
    }
    if (!vis.bp.allFinite() || (vis.bp.array() <= 0.0).any()) {
        throw InputError(kModule, "fit_ce", "conditional visibilities must be strictly positive");
    }
    EstimateResult r = base_result(Estimator::kCE, model, &cm);
    const MatrixXd U = cm.H.array().colwise() / vis.bp.array();
    ELSolution el = solve_el(U, opt.el);
    const VectorXd ratio = el.w.array() / vis.bp.array();
    const double total = ratio.sum();
    r.step1_weights = el.w;
    r.weights = ratio / total;
    r.bp_hat = 1.0 / total;
    r.multiplier = el.multiplier;
    r.log_el = r.weights.array().log().sum() - static_cast<double>(data.n()) * std::log(r.bp_hat);
    r.constraint_residuals = cm.H.transpose() * r.weights;
    r.diagnostics.el_iterations = el.iterations;
    r.diagnostics.el_converged = el.converged;
    r.diagnostics.el_residual = el.residual;
    std::string failure;
    auto start = step2_start(data, model, opt, &failure);
    if (!start) {
        r.diagnostics.failure = failure;
        return r;
    }
    finish(r, data, model, cm, &vis, opt, *start);
    return r;
}

}  // namespace surveyel
