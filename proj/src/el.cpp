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

#include "surveyel/el.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "surveyel/error.hpp"
#include "surveyel/log.hpp"

namespace surveyel {
namespace {

constexpr const char* kModule = "el-core";

void validate(const MatrixXd& U, Index n_expected, const char* op) {
    if (U.rows() != n_expected) {
        throw InputError(kModule, op, "constraint matrix rows do not match weights");
    }
    if (!U.allFinite()) {
        throw InputError(kModule, op, "constraint matrix has nonfinite entries");
    }
    if (U.rows() <= U.cols()) {
        throw InputError(kModule, op,
                         "need n > q (n = " + std::to_string(U.rows()) +
                             ", q = " + std::to_string(U.cols()) + ")");
    }
}

std::vector<Index> active_columns(const MatrixXd& U) {
    std::vector<Index> cols;
    for (Index k = 0; k < U.cols(); ++k) {
        if ((U.col(k).array() != 0.0).any()) cols.push_back(k);
    }
    return cols;
}

MatrixXd take_columns(const MatrixXd& U, const std::vector<Index>& cols) {
    MatrixXd out(U.rows(), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = U.col(cols[j]);
    return out;
}

// A column of constant sign keeps zero outside the open hull.
void sign_precheck(const MatrixXd& U, const char* op) {
    for (Index k = 0; k < U.cols(); ++k) {
        if (U.col(k).minCoeff() >= 0.0 || U.col(k).maxCoeff() <= 0.0) {
            throw InfeasibleError(kModule, op,
                                  "constraint " + std::to_string(k + 1) +
                                      " has constant sign; zero is not interior to the hull");
        }
    }
}

// Newton step for a convex function with gradient g and Hessian Hs; falls back
// to steepest descent when Hs is not numerically positive definite.
VectorXd newton_direction(const MatrixXd& Hs, const VectorXd& g) {
    Eigen::LDLT<MatrixXd> ldlt(Hs);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        (ldlt.vectorD().array() > 1e-300).all()) {
        VectorXd step = -ldlt.solve(g);
        if (step.allFinite() && step.dot(g) < 0) return step;
    }
    return -g;
}

}  // namespace

ELSolution solve_weighted_el(const MatrixXd& U, const VectorXd& d_in, const ELOptions& opt) {
    const char* op = "solve_weighted_el";
    const Index n = d_in.size();
    validate(U, n, op);
    if ((d_in.array() <= 0.0).any() || !d_in.allFinite()) {
        throw InputError(kModule, op, "weights must be strictly positive");
    }
    const VectorXd d = d_in / d_in.sum();

    ELSolution sol;
    sol.multiplier = VectorXd::Zero(U.cols());
    const std::vector<Index> cols = active_columns(U);
    if (cols.empty()) {
        sol.w = std::abs(d_in.sum() - 1.0) < 1e-12 ? d_in : d;
        sol.log_el = (d.array() * d.array().log()).sum();
        sol.converged = true;
        sol.trace.push_back(0.0);
        return sol;
    }
    const MatrixXd Ua = take_columns(U, cols);
    sign_precheck(Ua, op);
    const double u_scale = Ua.cwiseAbs().maxCoeff();

    VectorXd lambda = VectorXd::Zero(Ua.cols());
    VectorXd den = VectorXd::Ones(n);
    double F = 0.0;
    sol.trace.push_back(F);
    bool stalled = false;
    VectorXd a = d;
    VectorXd g;
    for (int it = 0; it <= opt.max_iterations; ++it) {
        a = d.array() / den.array();
        g = -(Ua.transpose() * a);
        if (g.cwiseAbs().maxCoeff() < opt.tolerance) {
            sol.converged = true;
            if (it > 0) {
                // One full Newton step more puts the multiplier at rounding level.
                const VectorXd c = a.array().square() / d.array();
                const MatrixXd Hs = Ua.transpose() * (Ua.array().colwise() * c.array()).matrix();
                const VectorXd trial_lambda = lambda + newton_direction(Hs, g);
                const VectorXd trial_den = VectorXd::Ones(n) + Ua * trial_lambda;
                if ((trial_den.array() > d.array()).all()) {
                    const VectorXd trial_a = d.array() / trial_den.array();
                    const VectorXd trial_g = -(Ua.transpose() * trial_a);
                    if (trial_g.cwiseAbs().maxCoeff() <= g.cwiseAbs().maxCoeff()) {
                        lambda = trial_lambda;
                        den = trial_den;
                        a = trial_a;
                        g = trial_g;
                    }
                }
            }
            break;
        }
        if (it == opt.max_iterations) break;
        if (a.sum() < 1e-8 || lambda.cwiseAbs().maxCoeff() * u_scale > 1e10) {
            throw InfeasibleError(kModule, op,
                                  "dual is unbounded; zero is not interior to the constraint hull");
        }
        const VectorXd c = a.array().square() / d.array();
        const MatrixXd Hs = Ua.transpose() * (Ua.array().colwise() * c.array()).matrix();
        const VectorXd step = newton_direction(Hs, g);
        const double slope = g.dot(step);
        double t = 1.0;
        bool accepted = false;
        VectorXd trial_lambda;
        VectorXd trial_den;
        double trial_F = 0.0;
        for (int h = 0; h <= opt.max_halvings; ++h, t *= 0.5) {
            trial_lambda = lambda + t * step;
            trial_den = VectorXd::Ones(n) + Ua * trial_lambda;
            if (!((trial_den.array() > d.array()).all())) continue;
            trial_F = -(d.array() * trial_den.array().log()).sum();
            if (trial_F <= F + opt.armijo * t * slope) {
                accepted = true;
                break;
            }
            // Near the optimum the predicted decrease falls below the rounding
            // of F; accept the full step when it shrinks the gradient instead.
            if (h == 0 && -slope < 1e-13 * (1.0 + std::abs(F))) {
                const VectorXd trial_g = -(Ua.transpose() * (d.array() / trial_den.array()).matrix());
                if (trial_g.cwiseAbs().maxCoeff() < g.cwiseAbs().maxCoeff()) {
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted) {
            stalled = true;
            break;
        }
        lambda = trial_lambda;
        den = trial_den;
        F = trial_F;
        sol.iterations = it + 1;
        sol.trace.push_back(F);
    }
    if (!sol.converged) {
        if (a.sum() < 1e-6 || lambda.cwiseAbs().maxCoeff() * u_scale > 1e8) {
            throw InfeasibleError(kModule, op,
                                  "dual is unbounded; zero is not interior to the constraint hull");
        }
        throw ConvergenceError(kModule, op,
                               std::string(stalled ? "line search collapsed" : "iteration limit") +
                                   " with dual gradient " + std::to_string(g.cwiseAbs().maxCoeff()));
    }
    sol.w = a / a.sum();
    for (std::size_t j = 0; j < cols.size(); ++j) sol.multiplier(cols[j]) = lambda(static_cast<Index>(j));
    sol.log_el = (d.array() * sol.w.array().log()).sum();
    sol.residual = (U.transpose() * sol.w).cwiseAbs().maxCoeff();
    return sol;
}

ELSolution solve_el(const MatrixXd& U, const ELOptions& options) {
    const Index n = U.rows();
    if (n < 1) {
        throw InputError(kModule, "solve_el", "empty constraint matrix");
    }
    ELSolution sol = solve_weighted_el(U, VectorXd::Constant(n, 1.0 / static_cast<double>(n)), options);
    const double dn = static_cast<double>(n);
    sol.log_el = sol.w.array().log().sum();
    for (double& v : sol.trace) v *= dn;
    return sol;
}

ELSolution dual_minimize_kappa(const MatrixXd& H, const VectorXd& bp, const ELOptions& opt) {
    const char* op = "dual_minimize_kappa";
    const Index n = bp.size();
    validate(H, n, op);
    if ((bp.array() <= 0.0).any() || !bp.allFinite()) {
        throw InputError(kModule, op, "conditional visibilities must be strictly positive");
    }
    const double dn = static_cast<double>(n);

    auto weights_of = [&](const VectorXd& den) {
        VectorXd w = den.cwiseInverse();
        return VectorXd(w / w.sum());
    };
    // n (bp_i + kappa h_i) >= sum_j bp_j w_j
    auto restriction_slack = [&](const VectorXd& den) {
        const double B = bp.dot(weights_of(den));
        return (dn * den.array() - B).minCoeff() / B;
    };

    ELSolution sol;
    sol.multiplier = VectorXd::Zero(H.cols());
    const std::vector<Index> cols = active_columns(H);
    VectorXd den = bp;
    if (!cols.empty()) {
        const MatrixXd Ha = take_columns(H, cols);
        sign_precheck(Ha, op);
        VectorXd kappa = VectorXd::Zero(Ha.cols());
        double F = -bp.array().log().sum() / dn;
        sol.trace.push_back(F * dn);
        bool enforce_restriction = true;
        VectorXd g;
        for (int it = 0; it <= opt.max_iterations; ++it) {
            const VectorXd inv = den.cwiseInverse();
            g = -(Ha.transpose() * inv) / dn;
            if (g.cwiseAbs().maxCoeff() < opt.tolerance) {
                sol.converged = true;
                break;
            }
            if (it == opt.max_iterations) break;
            const VectorXd inv2 = inv.array().square();
            const MatrixXd Hs = Ha.transpose() * (Ha.array().colwise() * inv2.array()).matrix() / dn;
            const VectorXd step = newton_direction(Hs, g);
            const double slope = g.dot(step);
            bool accepted = false;
            VectorXd trial_kappa;
            VectorXd trial_den;
            double trial_F = 0.0;
            for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
                double t = 1.0;
                for (int h = 0; h <= opt.max_halvings; ++h, t *= 0.5) {
                    trial_kappa = kappa + t * step;
                    trial_den = bp + Ha * trial_kappa;
                    if (!((trial_den.array() > 0.0).all())) continue;
                    if (enforce_restriction && restriction_slack(trial_den) < 0.0) continue;
                    trial_F = -trial_den.array().log().sum() / dn;
                    if (trial_F <= F + opt.armijo * t * slope) {
                        accepted = true;
                        break;
                    }
                    if (h == 0 && -slope < 1e-13 * (1.0 + std::abs(F))) {
                        const VectorXd trial_g = -(Ha.transpose() * trial_den.cwiseInverse()) / dn;
                        if (trial_g.cwiseAbs().maxCoeff() < g.cwiseAbs().maxCoeff()) {
                            accepted = true;
                            break;
                        }
                    }
                }
                if (!accepted && enforce_restriction) {
                    // The bound moves with the weights; retry on positivity alone.
                    enforce_restriction = false;
                    log::debug("el-core/dual_minimize_kappa: restriction blocks the step; relaxing");
                }
            }
            if (!accepted) break;
            if (kappa.cwiseAbs().maxCoeff() * Ha.cwiseAbs().maxCoeff() / bp.maxCoeff() > 1e10) {
                throw InfeasibleError(kModule, op, "dual is unbounded; constraint set infeasible");
            }
            kappa = trial_kappa;
            den = trial_den;
            F = trial_F;
            sol.iterations = it + 1;
            sol.trace.push_back(F * dn);
        }
        if (!sol.converged) {
            if (kappa.cwiseAbs().maxCoeff() * Ha.cwiseAbs().maxCoeff() / bp.maxCoeff() > 1e8) {
                throw InfeasibleError(kModule, op, "dual is unbounded; constraint set infeasible");
            }
            throw ConvergenceError(kModule, op, "no convergence of the kappa dual");
        }
        for (std::size_t j = 0; j < cols.size(); ++j) sol.multiplier(cols[j]) = kappa(static_cast<Index>(j));
    } else {
        sol.converged = true;
        sol.trace.push_back(-bp.array().log().sum());
    }
    sol.w = weights_of(den);
    const double slack = restriction_slack(den);
    if (slack < -1e-12) {
        throw InfeasibleError(kModule, op, "restriction violated at the stationary point");
    }
    sol.restriction_binding = slack <= 1e-12;
    sol.log_el = sol.w.array().log().sum() - dn * std::log(bp.dot(sol.w));
    sol.residual = (H.transpose() * sol.w).cwiseAbs().maxCoeff();
    if (sol.residual > 1e-8 * (1.0 + H.cwiseAbs().maxCoeff())) {
        // A vanishing gradient with nonzero normalized residual means kappa ran off to infinity.
        throw InfeasibleError(kModule, op, "dual is unbounded; constraint set infeasible");
    }
    return sol;
}

}  // namespace surveyel
