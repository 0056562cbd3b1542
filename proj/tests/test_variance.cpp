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

#include <doctest.h>

#include <cmath>

#include <Eigen/LU>

#include "designs.hpp"
#include "surveyel/error.hpp"
#include "surveyel/variance.hpp"
#include "test_util.hpp"

using namespace surveyel;

namespace {

ComponentInputs four_point_inputs() {
    ComponentInputs in;
    in.X.resize(4, 2);
    in.X << 1, 0.5, 1, -1.2, 1, 2.0, 1, 0.1;
    in.psi.resize(4, 2);
    in.psi << 0.3, 0.15, -0.6, 0.72, 0.45, 0.9, -0.2, -0.02;
    in.c.resize(4);
    in.c << 0.21, 0.24, 0.2475, 0.16;
    in.H.resize(4, 2);
    in.H << 0.4, -1.0, -0.7, 0.3, 0.2, 0.8, 0.1, -0.2;
    in.d.resize(4);
    in.d << 0.1, 0.4, 0.3, 0.2;
    in.w.resize(4);
    in.w << 0.15, 0.35, 0.2, 0.3;
    in.bp.resize(4);
    in.bp << 0.8, 0.25, 0.4, 0.5;
    return in;
}

struct HandSums {
    MatrixXd G, Gs, K1, K2, H1, H2, cG, cGs, cK2, cH2;
};

// Term-by-term sums over the four rows with explicit outer products.
HandSums hand_sums(const ComponentInputs& in, bool literal) {
    const Index p = in.X.cols(), q = in.H.cols();
    const double n = 4;
    HandSums s{MatrixXd::Zero(p, p), MatrixXd::Zero(p, p), MatrixXd::Zero(p, q), MatrixXd::Zero(p, q),
               MatrixXd::Zero(q, q), MatrixXd::Zero(q, q), MatrixXd::Zero(p, p), MatrixXd::Zero(p, p),
               MatrixXd::Zero(p, q), MatrixXd::Zero(q, q)};
    double B = 0;
    for (Index i = 0; i < 4; ++i) B += in.bp(i) * in.w(i);
    for (Index i = 0; i < 4; ++i) {
        const VectorXd x = in.X.row(i).transpose(), ps = in.psi.row(i).transpose(), h = in.H.row(i).transpose();
        const MatrixXd dpsi = -in.c(i) * x * x.transpose();
        const double w = in.w(i), d = in.d(i), b = in.bp(i);
        if (literal) {
            s.G += w * d * dpsi;
            s.Gs += w * w * d * d * ps * ps.transpose();
            s.K1 += w * w * d * ps * h.transpose();
            s.K2 += w * w * d * d * ps * h.transpose();
            s.H1 += w * w * d * h * h.transpose();
            s.H2 += w * w * d * d * h * h.transpose();
            s.cG += w * dpsi / b;
            s.cGs += w * w * ps * ps.transpose() / (b * b);
            s.cK2 += w * w * ps * h.transpose() / (b * b);
            s.cH2 += w * w * h * h.transpose() / (b * b);
        } else {
            s.G += w * dpsi;
            s.Gs += n * w * w * ps * ps.transpose();
            s.K1 += w * w / d * ps * h.transpose();
            s.K2 += n * w * w * ps * h.transpose();
            s.H1 += w * w / d * h * h.transpose();
            s.H2 += n * w * w * h * h.transpose();
            s.cG += w * dpsi / B;
            s.cGs += n * w * w * ps * ps.transpose() / (B * B);
            s.cK2 += n * w * w * ps * h.transpose() / (B * B);
            s.cH2 += n * w * w * h * h.transpose() / (B * B);
        }
    }
    return s;
}

double maxabs(const MatrixXd& a, const MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

double rel_frob(const MatrixXd& a, const MatrixXd& ref) { return (a - ref).norm() / ref.norm(); }

struct Fit {
    Dataset sample;
    ConstraintMatrix cm;
    VisibilityModel vis;
    EstimateResult cs, ce;
};

Fit poisson_fit(Index N, std::uint64_t seed) {
    DesignSpec d = testdesigns::poisson_logit(N);
    Dataset pop = gen_population(d, seed);
    Fit f;
    f.sample = draw_sample(pop, d, seed + 1);
    f.cm = build_constraint_matrix(f.sample, resolve_constraint_truth(d));
    f.vis = visibility_from_pi(f.sample);
    f.cs = fit_cs(f.sample, testdesigns::logit_x(), f.cm);
    f.ce = fit_ce(f.sample, testdesigns::logit_x(), f.cm, f.vis);
    return f;
}

}  // namespace

TEST_CASE("plug-in matrices on four points match hand sums") {
    const ComponentInputs in = four_point_inputs();
    for (PlugInRule rule : {PlugInRule::kDisplayLiteral, PlugInRule::kStackedMoments}) {
        INFO("rule " << to_string(rule));
        const HandSums h = hand_sums(in, rule == PlugInRule::kDisplayLiteral);
        CovarianceComponents r = roman_components(in, rule);
        CovarianceComponents c = calligraphic_components(in, rule);
        CHECK(maxabs(r.G, h.G) < 1e-12);
        CHECK(maxabs(r.Gstar, h.Gs) < 1e-12);
        CHECK(maxabs(r.K1, h.K1) < 1e-12);
        CHECK(maxabs(r.K2, h.K2) < 1e-12);
        CHECK(maxabs(r.H1, h.H1) < 1e-12);
        CHECK(maxabs(r.H2, h.H2) < 1e-12);
        CHECK(maxabs(c.calG, h.cG) < 1e-12);
        CHECK(maxabs(c.calGstar, h.cGs) < 1e-12);
        CHECK(maxabs(c.calK2, h.cK2) < 1e-12);
        CHECK(maxabs(c.calH2, h.cH2) < 1e-12);

        // Sandwich assembly from the hand sums.
        const MatrixXd Gi = h.G.inverse();
        const MatrixXd B = h.K1 * h.H1.inverse();
        const MatrixXd Vcs = Gi * (h.Gs - B * h.K2.transpose() - h.K2 * B.transpose() + B * h.H2 * B.transpose()) *
                             Gi.transpose();
        const MatrixXd cGi = h.cG.inverse();
        const MatrixXd Vce = cGi * (h.cGs - h.cK2 * h.cH2.inverse() * h.cK2.transpose()) * cGi.transpose();
        const double scale = rule == PlugInRule::kStackedMoments ? 0.25 : 1.0;
        CHECK(maxabs(assemble_covariance(r, Estimator::kCS), scale * Vcs) < 1e-10 * Vcs.norm());
        CHECK(maxabs(assemble_covariance(c, Estimator::kCE), scale * Vce) < 1e-10 * Vce.norm());
        CHECK(maxabs(assemble_covariance(r, Estimator::kPL), scale * Gi * h.Gs * Gi.transpose()) < 1e-10);
    }
}

TEST_CASE("appendix factorization of the CS minus CE gap") {
    for (std::uint64_t seed : {3u, 4u, 5u}) {
        Fit f = poisson_fit(6000, seed);
        REQUIRE(f.cs.converged);
        CovarianceComponents c = covariance_components(f.cs, f.sample, testdesigns::logit_x(), f.cm, nullptr,
                                                       PlugInRule::kStackedMoments);
        c.calG = c.G;
        c.calGstar = c.Gstar;
        c.calK2 = c.K2;
        c.calH2 = c.H2;
        c.has_calligraphic = true;
        const MatrixXd lhs = c.G * (sandwich_cs(c) - sandwich_ce(c)) * c.G.transpose();
        const MatrixXd rhs = theorem4_factor(c);
        CHECK(maxabs(lhs, rhs) < 1e-10 * std::max(1.0, rhs.norm()));
    }
}

TEST_CASE("PL covariance is close to inverse Fisher information") {
    std::mt19937_64 rng(5000);
    const Index n = 5000;
    VectorXd x = testutil::normal_vector(rng, n).array() + 0.5;
    VectorXd u = testutil::uniform_vector(rng, n, 0, 1);
    VectorXd y(n);
    const double b0 = -0.4, b1 = 0.9;
    for (Index i = 0; i < n; ++i) y(i) = u(i) < expit(b0 + b1 * x(i)) ? 1.0 : 0.0;
    Schema s;
    s.response = "y";
    Dataset data = Dataset::from_table(Table{{"y", "x"}, {y, x}}, s);
    EstimateResult pl = fit_pl(data, testdesigns::logit_x());
    REQUIRE(pl.converged);
    MatrixXd I = MatrixXd::Zero(2, 2);
    for (Index i = 0; i < n; ++i) {
        const double m = expit(b0 + b1 * x(i));
        Eigen::Vector2d xi(1.0, x(i));
        I += m * (1 - m) * xi * xi.transpose();
    }
    const MatrixXd F = I.inverse();
    CHECK(((pl.covariance - F).array().abs() < 0.15 * F.array().abs()).all());
    CHECK((pl.covariance - pl.covariance.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("CE without constraints reduces to the calligraphic PL sandwich") {
    Fit f = poisson_fit(4000, 8);
    EstimateResult ce = fit_ce(f.sample, testdesigns::logit_x(), ConstraintMatrix::none(f.sample.n()), f.vis);
    REQUIRE(ce.converged);
    CovarianceComponents c = covariance_components(ce, f.sample, testdesigns::logit_x(),
                                                   ConstraintMatrix::none(f.sample.n()), &f.vis,
                                                   PlugInRule::kStackedMoments);
    CHECK(c.calH2.size() == 0);
    const MatrixXd Gi = c.calG.inverse();
    const MatrixXd ref = Gi * c.calGstar * Gi.transpose() / double(c.n);
    CHECK(maxabs(ce.covariance, ref) < 1e-12 * ref.norm());
}

TEST_CASE("CS sandwich matches the independence form when d is independent of the data") {
    std::mt19937_64 rng(77);
    const Index n = 20000;
    VectorXd x = testutil::normal_vector(rng, n);
    VectorXd u = testutil::uniform_vector(rng, n, 0, 1);
    VectorXd y(n);
    for (Index i = 0; i < n; ++i) y(i) = u(i) < expit(-0.5 + 0.8 * x(i)) ? 1.0 : 0.0;
    VectorXd pi = testutil::uniform_vector(rng, n, 0.1, 1.0);
    VectorXd xy = x.cwiseProduct(y);
    Schema s;
    s.response = "y";
    s.covariates = {"x"};
    s.weight_source = "pi";
    Dataset data = Dataset::from_table(Table{{"y", "x", "pi", "xy"}, {y, x, pi, xy}}, s);
    MatrixXd H(n, 2);
    H.col(0) = y.array() - y.mean();
    H.col(1) = xy.array() - xy.mean();
    ConstraintMatrix cm = make_constraint_matrix(H);
    EstimateResult cs = fit_cs(data, testdesigns::logit_x(), cm);
    REQUIRE(cs.converged);
    CovarianceComponents c =
        covariance_components(cs, data, testdesigns::logit_x(), cm, nullptr, PlugInRule::kStackedMoments);
    const VectorXd full = sandwich_cs(c).diagonal();
    const VectorXd indep = sandwich_cs_independent(c).diagonal();
    CHECK(((full - indep).array().abs() < 0.05 * indep.array()).all());
}

TEST_CASE("plug-in components approach their large-sample values") {
    // Reference at about twenty times the sample size.
    Fit small = poisson_fit(84000, 101);
    Fit big = poisson_fit(1680000, 202);
    REQUIRE(small.sample.n() > 19500);
    const ModelSpec m = testdesigns::logit_x();
    const auto rule = PlugInRule::kStackedMoments;
    CovarianceComponents rs = covariance_components(small.cs, small.sample, m, small.cm, nullptr, rule);
    CovarianceComponents rb = covariance_components(big.cs, big.sample, m, big.cm, nullptr, rule);
    CovarianceComponents cs = covariance_components(small.ce, small.sample, m, small.cm, &small.vis, rule);
    CovarianceComponents cb = covariance_components(big.ce, big.sample, m, big.cm, &big.vis, rule);
    CHECK(rel_frob(rs.G, rb.G) < 0.05);
    CHECK(rel_frob(rs.Gstar, rb.Gstar) < 0.05);
    CHECK(rel_frob(rs.K1, rb.K1) < 0.05);
    CHECK(rel_frob(rs.K2, rb.K2) < 0.05);
    CHECK(rel_frob(rs.H1, rb.H1) < 0.05);
    CHECK(rel_frob(rs.H2, rb.H2) < 0.05);
    CHECK(rel_frob(cs.calG, cb.calG) < 0.05);
    CHECK(rel_frob(cs.calGstar, cb.calGstar) < 0.05);
    CHECK(rel_frob(cs.calK2, cb.calK2) < 0.05);
    CHECK(rel_frob(cs.calH2, cb.calH2) < 0.05);
}

TEST_CASE("efficiency gap") {
    MatrixXd V(2, 2);
    V << 2, 0.3, 0.3, 1;
    EfficiencyGap same = efficiency_gap(V, V);
    CHECK(same.gap.isZero());
    CHECK(same.min_eigenvalue == 0.0);
    MatrixXd W = V;
    W(1, 1) = 1.5;
    CHECK(efficiency_gap(V, W).min_eigenvalue == doctest::Approx(-0.5));
    CHECK_THROWS_AS(efficiency_gap(V, MatrixXd::Identity(3, 3)), InputError);
}

TEST_CASE("covariances are symmetric with nonnegative diagonal") {
    Fit f = poisson_fit(5000, 12);
    for (const EstimateResult* r : {&f.cs, &f.ce}) {
        REQUIRE(r->converged);
        CHECK((r->covariance - r->covariance.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((r->covariance.diagonal().array() >= 0).all());
    }
    EstimateResult bad;
    CHECK_THROWS_AS(covariance_components(bad, f.sample, testdesigns::logit_x(), f.cm, nullptr,
                                          PlugInRule::kStackedMoments),
                    InputError);
    CHECK_THROWS_AS(covariance_components(f.ce, f.sample, testdesigns::logit_x(), f.cm, nullptr,
                                          PlugInRule::kStackedMoments),
                    InputError);
}
