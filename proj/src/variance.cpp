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

#include "surveyel/variance.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "surveyel/error.hpp"
#include "linalg.hpp"

namespace surveyel {
namespace {

constexpr const char* kModule = "variance";

// sum_i s_i u_i v_i^T
MatrixXd wsum(const MatrixXd& U, const VectorXd& s, const MatrixXd& V) {
    return U.transpose() * (V.array().colwise() * s.array()).matrix();
}

// sum_i s_i psi'_i with psi'_i = -c_i x_i x_i^T
MatrixXd wjac(const ComponentInputs& in, const VectorXd& s) {
    return -wsum(in.X, (s.array() * in.c.array()).matrix(), in.X);
}

void check_inputs(const ComponentInputs& in, bool need_bp) {
    const Index n = in.psi.rows();
    if (in.X.rows() != n || in.c.size() != n || in.H.rows() != n || in.d.size() != n ||
        in.w.size() != n || (need_bp && in.bp.size() != n) || in.X.cols() != in.psi.cols()) {
        throw InputError(kModule, "covariance_components", "dimension mismatch among inputs");
    }
}

void check_finite(const CovarianceComponents& c) {
    for (const MatrixXd* m : {&c.G, &c.Gstar, &c.K1, &c.K2, &c.H1, &c.H2, &c.calG, &c.calGstar,
                              &c.calK2, &c.calH2}) {
        if (!m->allFinite()) {
            throw NumericalError(kModule, "covariance_components", "non-finite component sum");
        }
    }
}

MatrixXd sym(const MatrixXd& M) { return detail::symmetrize(M); }

}  // namespace

CovarianceComponents roman_components(const ComponentInputs& in, PlugInRule rule) {
    check_inputs(in, false);
    CovarianceComponents out;
    out.rule = rule;
    out.n = in.psi.rows();
    out.has_roman = true;
    const double n = static_cast<double>(out.n);
    const VectorXd& w = in.w;
    const VectorXd& d = in.d;
    if (rule == PlugInRule::kStackedMoments) {
        // a_i = n d_i / (1 + lambda^T h_i) = n w_i; n d_i / (1 + lambda^T h_i)^2 = a_i^2 / (n d_i)
        const VectorXd a = n * w;
        const VectorXd a2 = a.array().square();
        const VectorXd b = a2.array() / (n * d.array());
        out.G = wjac(in, a) / n;
        out.Gstar = sym(wsum(in.psi, a2, in.psi) / n);
        out.K1 = wsum(in.psi, b, in.H) / n;
        out.K2 = wsum(in.psi, a2, in.H) / n;
        out.H1 = sym(wsum(in.H, b, in.H) / n);
        out.H2 = sym(wsum(in.H, a2, in.H) / n);
    } else {
        const VectorXd wd = w.array() * d.array();
        const VectorXd w2 = w.array().square();
        const VectorXd w2d = w2.array() * d.array();
        const VectorXd w2d2 = w2d.array() * d.array();
        out.G = wjac(in, wd);
        out.Gstar = sym(wsum(in.psi, w2d2, in.psi));
        out.K1 = wsum(in.psi, w2d, in.H);
        out.K2 = wsum(in.psi, w2d2, in.H);
        out.H1 = sym(wsum(in.H, w2d, in.H));
        out.H2 = sym(wsum(in.H, w2d2, in.H));
    }
    check_finite(out);
    return out;
}

CovarianceComponents calligraphic_components(const ComponentInputs& in, PlugInRule rule) {
    check_inputs(in, true);
    CovarianceComponents out;
    out.rule = rule;
    out.n = in.psi.rows();
    out.has_calligraphic = true;
    const double n = static_cast<double>(out.n);
    const VectorXd& w = in.w;
    if (rule == PlugInRule::kStackedMoments) {
        // 1 / (bp_i + kappa^T h_i) = n w_i / sum_j bp_j w_j
        const VectorXd inv = n * w / in.bp.dot(w);
        const VectorXd inv2 = inv.array().square();
        out.calG = wjac(in, inv) / n;
        out.calGstar = sym(wsum(in.psi, inv2, in.psi) / n);
        out.calK2 = wsum(in.psi, inv2, in.H) / n;
        out.calH2 = sym(wsum(in.H, inv2, in.H) / n);
    } else {
        const VectorXd wb = w.array() / in.bp.array();
        const VectorXd w2b2 = wb.array().square();
        out.calG = wjac(in, wb);
        out.calGstar = sym(wsum(in.psi, w2b2, in.psi));
        out.calK2 = wsum(in.psi, w2b2, in.H);
        out.calH2 = sym(wsum(in.H, w2b2, in.H));
    }
    check_finite(out);
    return out;
}

CovarianceComponents covariance_components(const EstimateResult& fit, const Dataset& data,
                                           const ModelSpec& model, const ConstraintMatrix& constraints,
                                           const VisibilityModel* vis, PlugInRule rule) {
    if (!fit.converged || !fit.theta.allFinite()) {
        throw InputError(kModule, "covariance_components", "fit did not converge");
    }
    ComponentInputs in;
    in.X = design_matrix(model, data);
    in.psi = score(model.family, fit.theta, in.X, data.y());
    in.c = jacobian_scale(model.family, in.X * fit.theta);
    in.d = data.d();
    in.w = fit.weights;
    in.H = fit.estimator == Estimator::kPL ? MatrixXd(data.n(), 0) : constraints.active();
    if (fit.estimator == Estimator::kCE) {
        if (vis == nullptr) {
            throw InputError(kModule, "covariance_components", "CE components need the visibility model");
        }
        in.bp = vis->bp;
        return calligraphic_components(in, rule);
    }
    return roman_components(in, rule);
}

MatrixXd sandwich_pl(const CovarianceComponents& c) {
    auto& warn = c.warnings;
    const MatrixXd Gi = detail::robust_inverse(c.G, kModule, "assemble_covariance", "G", &warn);
    return sym(Gi * c.Gstar * Gi.transpose());
}

MatrixXd sandwich_cs(const CovarianceComponents& c) {
    auto& warn = c.warnings;
    const MatrixXd Gi = detail::robust_inverse(c.G, kModule, "assemble_covariance", "G", &warn);
    if (c.H1.size() == 0) {
        return sym(Gi * c.Gstar * Gi.transpose());
    }
    const MatrixXd H1i = detail::robust_inverse(c.H1, kModule, "assemble_covariance", "H1", &warn);
    const MatrixXd B = c.K1 * H1i;
    const MatrixXd mid = c.Gstar - B * c.K2.transpose() - c.K2 * B.transpose() + B * c.H2 * B.transpose();
    return sym(Gi * sym(mid) * Gi.transpose());
}

MatrixXd sandwich_cs_independent(const CovarianceComponents& c) {
    auto& warn = c.warnings;
    const MatrixXd Gi = detail::robust_inverse(c.G, kModule, "assemble_covariance", "G", &warn);
    if (c.H2.size() == 0) {
        return sym(Gi * c.Gstar * Gi.transpose());
    }
    const MatrixXd H2i = detail::robust_inverse(c.H2, kModule, "assemble_covariance", "H2", &warn);
    const MatrixXd mid = c.Gstar - c.K2 * H2i * c.K2.transpose();
    return sym(Gi * sym(mid) * Gi.transpose());
}

MatrixXd sandwich_ce(const CovarianceComponents& c) {
    auto& warn = c.warnings;
    const MatrixXd Gi = detail::robust_inverse(c.calG, kModule, "assemble_covariance", "calG", &warn);
    if (c.calH2.size() == 0) {
        return sym(Gi * c.calGstar * Gi.transpose());
    }
    const MatrixXd H2i = detail::robust_inverse(c.calH2, kModule, "assemble_covariance", "calH2", &warn);
    const MatrixXd mid = c.calGstar - c.calK2 * H2i * c.calK2.transpose();
    return sym(Gi * sym(mid) * Gi.transpose());
}

MatrixXd theorem4_factor(const CovarianceComponents& c) {
    const MatrixXd H1i = detail::robust_inverse(c.H1, kModule, "theorem4_factor", "H1");
    const MatrixXd H2i = detail::robust_inverse(c.H2, kModule, "theorem4_factor", "H2");
    const MatrixXd D = c.K2 * H2i - c.K1 * H1i;
    return sym(D * c.H2 * D.transpose());
}

MatrixXd assemble_covariance(CovarianceComponents& components, Estimator estimator) {
    MatrixXd V;
    switch (estimator) {
        case Estimator::kPL:
            if (!components.has_roman) throw InputError(kModule, "assemble_covariance", "Roman components missing");
            V = sandwich_pl(components);
            break;
        case Estimator::kCS:
            if (!components.has_roman) throw InputError(kModule, "assemble_covariance", "Roman components missing");
            V = sandwich_cs(components);
            break;
        case Estimator::kCE:
            if (!components.has_calligraphic) {
                throw InputError(kModule, "assemble_covariance", "calligraphic components missing");
            }
            V = sandwich_ce(components);
            break;
    }
    if (components.rule == PlugInRule::kStackedMoments) {
        V /= static_cast<double>(components.n);
    }
    if (!V.allFinite()) {
        throw NumericalError(kModule, "assemble_covariance", "non-finite covariance");
    }
    return sym(V);
}

EfficiencyGap efficiency_gap(const MatrixXd& Vcs, const MatrixXd& Vce) {
    if (Vcs.rows() != Vce.rows() || Vcs.cols() != Vce.cols() || Vcs.rows() != Vcs.cols()) {
        throw InputError(kModule, "efficiency_gap", "dimension mismatch");
    }
    EfficiencyGap g;
    g.gap = Vcs - Vce;
    if (g.gap.size() == 0) return g;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(g.gap), Eigen::EigenvaluesOnly);
    g.min_eigenvalue = es.eigenvalues().minCoeff();
    return g;
}

}  // namespace surveyel
