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

#include "surveyel/glm.hpp"

#include <cmath>
#include <limits>

#include <Eigen/QR>

#include "surveyel/error.hpp"

namespace surveyel {

Family parse_family(const std::string& s) {
    if (s == "bernoulli-logit" || s == "logit" || s == "binomial") return Family::kBernoulliLogit;
    if (s == "gamma-inverse" || s == "gamma") return Family::kGammaInverse;
    if (s == "gaussian-identity" || s == "gaussian") return Family::kGaussianIdentity;
    throw InputError("glm", "model", "unknown family '" + s + "'");
}

std::string to_string(Family f) {
    switch (f) {
        case Family::kBernoulliLogit: return "bernoulli-logit";
        case Family::kGammaInverse: return "gamma-inverse";
        case Family::kGaussianIdentity: return "gaussian-identity";
    }
    return "?";
}

std::vector<std::string> ModelSpec::coefficient_names() const {
    std::vector<std::string> out;
    if (intercept) out.emplace_back(kInterceptName);
    out.insert(out.end(), terms.begin(), terms.end());
    return out;
}

MatrixXd design_matrix(const ModelSpec& model, const Dataset& data) {
    if (model.p() == 0) {
        throw InputError("glm", "design_matrix", "model has no terms and no intercept");
    }
    MatrixXd X(data.n(), model.p());
    Index j = 0;
    if (model.intercept) X.col(j++).setOnes();
    for (const auto& t : model.terms) X.col(j++) = data.column(t);
    return X;
}

double expit(double x) {
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {

VectorXd linear_predictor(const VectorXd& theta, const MatrixXd& X, const char* op) {
    if (theta.size() != X.cols()) {
        throw InputError("glm", op,
                         "dimension mismatch: theta has " + std::to_string(theta.size()) +
                             " entries, design has " + std::to_string(X.cols()) + " columns");
    }
    VectorXd eta = X * theta;
    if (!eta.allFinite()) {
        throw NumericalError("glm", op, "nonfinite linear predictor");
    }
    return eta;
}

}  // namespace

VectorXd mean_function(Family family, const VectorXd& eta) {
    switch (family) {
        case Family::kBernoulliLogit: return eta.unaryExpr([](double e) { return expit(e); });
        case Family::kGammaInverse: return eta.cwiseInverse();
        case Family::kGaussianIdentity: return eta;
    }
    return eta;
}

VectorXd jacobian_scale(Family family, const VectorXd& eta) {
    switch (family) {
        case Family::kBernoulliLogit: {
            VectorXd p = mean_function(family, eta);
            return p.array() * (1.0 - p.array());
        }
        case Family::kGammaInverse: return eta.array().square().inverse();
        case Family::kGaussianIdentity: return VectorXd::Ones(eta.size());
    }
    return VectorXd::Ones(eta.size());
}

namespace {

// psi_i = r_i a_i
VectorXd score_residual(Family family, const VectorXd& eta, const VectorXd& y) {
    VectorXd mu = mean_function(family, eta);
    if (family == Family::kGammaInverse) {
        return mu - y;
    }
    return y - mu;
}

}  // namespace

MatrixXd score(Family family, const VectorXd& theta, const MatrixXd& X, const VectorXd& y) {
    if (y.size() != X.rows()) {
        throw InputError("glm", "score", "response length does not match design rows");
    }
    VectorXd eta = linear_predictor(theta, X, "score");
    VectorXd r = score_residual(family, eta, y);
    return X.array().colwise() * r.array();
}

MatrixXd score(const ModelSpec& model, const VectorXd& theta, const Dataset& data) {
    return score(model.family, theta, design_matrix(model, data), data.y());
}

VectorXd weighted_score(Family family, const VectorXd& theta, const MatrixXd& X,
                        const VectorXd& y, const VectorXd& w) {
    if (y.size() != X.rows() || w.size() != X.rows()) {
        throw InputError("glm", "score", "length mismatch between weights, response and design");
    }
    VectorXd eta = linear_predictor(theta, X, "score");
    VectorXd r = score_residual(family, eta, y);
    return X.transpose() * (w.array() * r.array()).matrix();
}

MatrixXd score_jacobian(Family family, const VectorXd& theta, const MatrixXd& X,
                        const VectorXd& y, const VectorXd& w) {
    if (y.size() != X.rows() || w.size() != X.rows()) {
        throw InputError("glm", "score_jacobian",
                         "length mismatch between weights, response and design");
    }
    VectorXd eta = linear_predictor(theta, X, "score_jacobian");
    VectorXd c = jacobian_scale(family, eta);
    MatrixXd J = -(X.transpose() * (X.array().colwise() * (w.array() * c.array())).matrix());
    return 0.5 * (J + J.transpose());
}

MatrixXd score_jacobian(const ModelSpec& model, const VectorXd& theta, const Dataset& data,
                        const VectorXd& w) {
    return score_jacobian(model.family, theta, design_matrix(model, data), data.y(), w);
}

namespace {

double deviance(Family family, const VectorXd& y, const VectorXd& mu, const VectorXd& w) {
    double dev = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
        if (w(i) == 0.0) continue;
        double term = 0.0;
        switch (family) {
            case Family::kBernoulliLogit: {
                const double p = mu(i);
                if (y(i) > 0) term += 2.0 * y(i) * std::log(y(i) / p);
                if (y(i) < 1) term += 2.0 * (1 - y(i)) * std::log((1 - y(i)) / (1 - p));
                break;
            }
            case Family::kGammaInverse:
                term = 2.0 * (-std::log(y(i) / mu(i)) + (y(i) - mu(i)) / mu(i));
                break;
            case Family::kGaussianIdentity: term = (y(i) - mu(i)) * (y(i) - mu(i)); break;
        }
        dev += w(i) * term;
    }
    return dev;
}

}  // namespace

IrlsResult irls_fit(Family family, const VectorXd& y_in, const MatrixXd& X,
                    const VectorXd& case_weights, const IrlsOptions& opt) {
    const char* op = "irls_fit";
    const Index n = X.rows();
    const Index p = X.cols();
    if (y_in.size() != n || case_weights.size() != n) {
        throw InputError("glm", op, "length mismatch between response, design and weights");
    }
    if ((case_weights.array() < 0).any() || !case_weights.allFinite() || case_weights.sum() <= 0) {
        throw InputError("glm", op, "case weights must be nonnegative with a positive total");
    }
    const VectorXd w = case_weights / case_weights.mean();
    double scale = 1.0;
    VectorXd y = y_in;
    for (Index i = 0; i < n; ++i) {
        if (w(i) == 0) continue;
        if (family == Family::kGammaInverse && !(y(i) > 0)) {
            throw InputError("glm", op, "Gamma responses must be strictly positive");
        }
        if (family == Family::kBernoulliLogit && (y(i) < 0 || y(i) > 1)) {
            throw InputError("glm", op, "Bernoulli responses must lie in [0, 1]");
        }
    }
    if (family == Family::kGammaInverse) {
        // Work on y / weighted mean; the coefficients scale back exactly.
        scale = w.dot(y) / w.sum();
        y /= scale;
    }

    {
        const VectorXd sw = w.cwiseSqrt();
        Eigen::ColPivHouseholderQR<MatrixXd> qr(X.array().colwise() * sw.array());
        qr.setThreshold(1e-12);
        if (qr.rank() < p) {
            throw NumericalError("glm", op,
                                 "design matrix is rank deficient on the weighted support (rank " +
                                     std::to_string(qr.rank()) + " < " + std::to_string(p) + ")");
        }
    }
    auto wls = [&](const VectorXd& W, const VectorXd& z) {
        VectorXd sw = W.cwiseSqrt();
        MatrixXd A = X.array().colwise() * sw.array();
        Eigen::ColPivHouseholderQR<MatrixXd> qr(A);
        qr.setThreshold(1e-12);
        if (qr.rank() < p && family == Family::kBernoulliLogit) {
            throw ConvergenceError("glm", op, "working weights vanish (possible separation)");
        }
        if (qr.rank() < p) {
            throw NumericalError("glm", op,
                                 "design matrix is rank deficient on the weighted support (rank " +
                                     std::to_string(qr.rank()) + " < " + std::to_string(p) + ")");
        }
        return VectorXd(qr.solve((z.array() * sw.array()).matrix()));
    };

    VectorXd mu(n);
    VectorXd eta(n);
    switch (family) {
        case Family::kBernoulliLogit:
            mu = (y.array() + 0.5) / 2.0;
            eta = (mu.array() / (1 - mu.array())).log();
            break;
        case Family::kGammaInverse:
            mu = y;
            for (Index i = 0; i < n; ++i) {
                if (!(mu(i) > 0)) mu(i) = 1.0;
            }
            eta = mu.cwiseInverse();
            break;
        case Family::kGaussianIdentity:
            mu = y;
            eta = y;
            break;
    }

    IrlsResult res;
    VectorXd coef = VectorXd::Zero(p);
    double dev_old = std::numeric_limits<double>::infinity();
    bool have_coef = false;
    bool constant_start = false;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        VectorXd c = jacobian_scale(family, eta);
        VectorXd W = w.array() * c.array();
        VectorXd z(n);
        switch (family) {
            case Family::kBernoulliLogit: z = eta.array() + (y - mu).array() / c.array(); break;
            case Family::kGammaInverse: z = eta.array() - (y - mu).array() / c.array(); break;
            case Family::kGaussianIdentity: z = y; break;
        }
        VectorXd cand = wls(W, z);
        VectorXd eta_new = X * cand;
        VectorXd mu_new = mean_function(family, eta_new);
        auto bad = [&]() {
            if (!eta_new.allFinite()) return true;
            if (family == Family::kGammaInverse && (eta_new.array() <= 0).any()) return true;
            return false;
        };
        double dev_new = bad() ? std::numeric_limits<double>::infinity() : deviance(family, y, mu_new, w);
        int halvings = 0;
        while (have_coef && (!std::isfinite(dev_new) || dev_new > dev_old * (1 + 1e-12) + 1e-300)) {
            if (++halvings > opt.max_halvings) {
                if (family == Family::kGammaInverse && bad()) {
                    throw NumericalError("glm", op,
                                         "could not keep fitted means positive after " +
                                             std::to_string(opt.max_halvings) + " halvings");
                }
                break;
            }
            cand = 0.5 * (cand + coef);
            eta_new = X * cand;
            mu_new = mean_function(family, eta_new);
            dev_new = bad() ? std::numeric_limits<double>::infinity() : deviance(family, y, mu_new, w);
        }
        if (!have_coef && !std::isfinite(dev_new) && family == Family::kGammaInverse && !constant_start) {
            // Restart from the projection of the constant predictor 1 / mean(y).
            constant_start = true;
            const double m = w.dot(y) / w.sum();
            cand = wls(w, VectorXd::Constant(n, 1.0 / m));
            eta_new = X * cand;
            if (!bad()) {
                coef = cand;
                eta = eta_new;
                mu = mean_function(family, eta);
                dev_old = deviance(family, y, mu, w);
                have_coef = true;
                continue;
            }
        }
        if (!have_coef && !std::isfinite(dev_new)) {
            throw NumericalError("glm", op, "initial fit leaves the mean domain");
        }
        const double change = have_coef ? (cand - coef).cwiseAbs().maxCoeff()
                                        : std::numeric_limits<double>::infinity();
        coef = cand;
        eta = eta_new;
        mu = mu_new;
        dev_old = dev_new;
        have_coef = true;
        res.iterations = it;
        if (family == Family::kBernoulliLogit && coef.norm() > opt.separation_bound) {
            throw ConvergenceError("glm", op, "coefficients diverge (possible separation)");
        }
        if (change < opt.tolerance || family == Family::kGaussianIdentity) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged) {
        throw ConvergenceError("glm", op,
                               "no convergence after " + std::to_string(opt.max_iterations) +
                                   " iterations");
    }
    if (family == Family::kGammaInverse) {
        coef /= scale;
        mu *= scale;
        dev_old = deviance(family, y_in, mu, w);
    }
    res.coef = coef;
    res.fitted = mu;
    res.deviance = dev_old;
    if (family == Family::kGammaInverse) {
        double pearson = 0.0;
        Index support = 0;
        for (Index i = 0; i < n; ++i) {
            if (w(i) == 0) continue;
            ++support;
            const double r = (y_in(i) - mu(i)) / mu(i);
            pearson += w(i) * r * r;
        }
        res.dispersion = support > p ? pearson / static_cast<double>(support - p) : 0.0;
    }
    return res;
}

}  // namespace surveyel
