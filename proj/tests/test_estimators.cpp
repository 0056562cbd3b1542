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

#include "designs.hpp"
#include "surveyel/error.hpp"
#include "surveyel/estimators.hpp"
#include "surveyel/simulate.hpp"
#include "test_util.hpp"

using namespace surveyel;

namespace {

struct Fixture {
    Dataset sample;
    ConstraintMatrix cm;
    VisibilityModel vis;
    ModelSpec model = testdesigns::logit_x();
};

Fixture simulated(Index N, std::uint64_t seed, DesignSpec design) {
    design.population_size = N;
    Dataset pop = gen_population(design, seed);
    Fixture f;
    f.sample = draw_sample(pop, design, seed + 1);
    f.cm = build_constraint_matrix(f.sample, resolve_constraint_truth(design));
    f.vis = visibility_from_pi(f.sample);
    return f;
}

Fixture simulated(Index N, std::uint64_t seed) { return simulated(N, seed, testdesigns::poisson_logit(N)); }

// Random small instance with a logistic response and uniform-on-(0.05, 1) bp.
Dataset random_dataset(std::mt19937_64& rng, Index n, bool uniform_d) {
    VectorXd x = testutil::normal_vector(rng, n);
    VectorXd u = testutil::uniform_vector(rng, n, 0, 1);
    VectorXd y(n);
    for (Index i = 0; i < n; ++i) y(i) = u(i) < expit(-0.3 + 0.9 * x(i)) ? 1.0 : 0.0;
    VectorXd pi = uniform_d ? VectorXd::Constant(n, 0.3) : testutil::uniform_vector(rng, n, 0.05, 1.0);
    Schema s;
    s.response = "y";
    s.covariates = {"x"};
    s.weight_source = "pi";
    return Dataset::from_table(Table{{"y", "x", "pi"}, {y, x, pi}}, s);
}

}  // namespace

TEST_CASE("CE weights without constraints are the normalized inverse visibilities") {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 50; ++rep) {
        Dataset data = random_dataset(rng, 30 + rep, false);
        VectorXd bp = testutil::uniform_vector(rng, data.n(), 0.01, 1.0);
        EstimateResult r = fit_ce(data, testdesigns::logit_x(), ConstraintMatrix::none(data.n()),
                                  visibility_from_values(bp));
        VectorXd ref = bp.cwiseInverse() / bp.cwiseInverse().sum();
        CHECK((r.weights - ref).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(r.bp_hat == doctest::Approx(double(data.n()) / bp.cwiseInverse().sum()).epsilon(1e-12));
    }
}

TEST_CASE("CS without constraints equals PL exactly") {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        Dataset data = random_dataset(rng, 80, false);
        EstimateResult pl = fit_pl(data, testdesigns::logit_x());
        EstimateResult cs = fit_cs(data, testdesigns::logit_x(), ConstraintMatrix::none(data.n()));
        REQUIRE(pl.converged);
        CHECK(cs.theta == pl.theta);
        CHECK(cs.weights == pl.weights);
    }
}

TEST_CASE("CE equals CS for constant visibility and uniform weights") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        Dataset data = random_dataset(rng, 120, true);
        MatrixXd H(data.n(), 2);
        H.col(0) = data.y().array() - 0.45;
        H.col(1) = data.column("x").array() - 0.1;
        ConstraintMatrix cm = make_constraint_matrix(H);
        EstimateResult ce = fit_ce(data, testdesigns::logit_x(), cm, visibility_from_values(VectorXd::Constant(data.n(), 0.3)));
        EstimateResult cs = fit_cs(data, testdesigns::logit_x(), cm);
        REQUIRE(ce.converged);
        REQUIRE(cs.converged);
        CHECK((ce.theta - cs.theta).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("CE is invariant to the scale of bp") {
    Fixture f = simulated(3000, 10);
    EstimateResult base = fit_ce(f.sample, f.model, f.cm, f.vis);
    REQUIRE(base.converged);
    for (double c : {0.1, 7.0}) {
        EstimateResult s = fit_ce(f.sample, f.model, f.cm, visibility_from_values(c * f.vis.bp));
        REQUIRE(s.converged);
        CHECK(testutil::max_rel(s.weights, base.weights) < 1e-10);
        CHECK(testutil::max_rel(s.theta, base.theta) < 1e-10);
        CHECK(testutil::max_rel(s.se, base.se) < 1e-10);
    }
}

TEST_CASE("PL corrects informative sampling while the unweighted MLE does not") {
    DesignSpec d = testdesigns::poisson_logit(6800, 0.02, 0.9, 2.5, -2.0);
    d.poisson.logit.coefs = {{"y", 2.5}};
    Fixture f = simulated(6800, 99, d);
    REQUIRE(f.sample.n() > 1700);
    const VectorXd theta0 = superpopulation_theta(d, f.model);
    EstimateResult pl = fit_pl(f.sample, f.model);
    REQUIRE(pl.converged);
    CHECK(((pl.theta - theta0).array().abs() < 3 * pl.se.array()).all());
    Dataset unweighted = f.sample.with_schema([&] {
        Schema s = f.sample.schema();
        s.weight_source.clear();
        s.pi.clear();
        return s;
    }());
    EstimateResult mle = fit_pl(unweighted, f.model);
    REQUIRE(mle.converged);
    CHECK(std::abs(mle.theta(0) - theta0(0)) > 5 * mle.se(0));
}

TEST_CASE("joint profile maximization agrees with the two-step estimate") {
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        Fixture f = simulated(2100, seed);
        EstimateResult two = fit_ce(f.sample, f.model, f.cm, f.vis);
        ProfileOptions po;
        EstimateResult joint = profile_fit_joint(f.sample, f.model, f.cm, f.vis, po);
        REQUIRE(two.converged);
        REQUIRE(joint.converged);
        CHECK((joint.theta - two.theta).cwiseAbs().maxCoeff() < 1e-3);
        // Residual constraints hold at the joint optimum.
        CHECK(joint.constraint_residuals.cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("profile gradient matches finite differences") {
    Fixture f = simulated(2000, 31);
    EstimateResult two = fit_ce(f.sample, f.model, f.cm, f.vis);
    VectorXd theta = two.theta;
    theta(1) += 0.02;
    VectorXd g;
    profile_log_el(f.sample, f.model, f.cm, f.vis, theta, &g);
    for (Index k = 0; k < theta.size(); ++k) {
        const double h = 1e-6;
        VectorXd tp = theta, tm = theta;
        tp(k) += h;
        tm(k) -= h;
        const double fd = (profile_log_el(f.sample, f.model, f.cm, f.vis, tp) -
                           profile_log_el(f.sample, f.model, f.cm, f.vis, tm)) / (2 * h);
        CHECK(fd == doctest::Approx(g(k)).epsilon(1e-5));
    }
}

TEST_CASE("constraint residuals and diagnostics") {
    Fixture f = simulated(4000, 41);
    EstimateResult cs = fit_cs(f.sample, f.model, f.cm);
    EstimateResult ce = fit_ce(f.sample, f.model, f.cm, f.vis);
    CHECK(cs.constraint_residuals.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(ce.constraint_residuals.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(cs.weights.sum() - 1) < 1e-12);
    CHECK(std::abs(ce.weights.sum() - 1) < 1e-12);
    CHECK(ce.diagnostics.starts_agree);
    CHECK(ce.diagnostics.score_norm < 1e-10);
    CHECK(ce.bp_hat > 0);
    CHECK(std::isfinite(ce.log_el));
}

TEST_CASE("separated data reports non-convergence") {
    MatrixXd xs(8, 1);
    xs << -4, -3, -2, -1, 1, 2, 3, 4;
    VectorXd y(8), pi = VectorXd::Constant(8, 0.5);
    y << 0, 0, 0, 0, 1, 1, 1, 1;
    Schema s;
    s.response = "y";
    s.weight_source = "pi";
    Dataset data = Dataset::from_table(Table{{"y", "x", "pi"}, {y, VectorXd(xs.col(0)), pi}}, s);
    EstimateResult r = fit_pl(data, testdesigns::logit_x());
    CHECK(!r.converged);
    CHECK(!r.diagnostics.failure.empty());
    CHECK(r.theta.hasNaN());
    MatrixXd H(8, 1);
    H.col(0) = y.array() - 0.5;
    EstimateResult c = fit_cs(data, testdesigns::logit_x(), make_constraint_matrix(H));
    CHECK(!c.converged);
}

TEST_CASE("newton start already at the root is returned unchanged") {
    Fixture f = simulated(2000, 51);
    EstimateResult pl = fit_pl(f.sample, f.model);
    NewtonResult again = newton_solve_score(f.sample.d(), f.model, f.sample, pl.theta);
    CHECK(again.theta == pl.theta);
    CHECK(again.iterations == 0);
    CHECK(parse_estimator("ce") == Estimator::kCE);
    CHECK_THROWS_AS(parse_estimator("GMM"), InputError);
}
