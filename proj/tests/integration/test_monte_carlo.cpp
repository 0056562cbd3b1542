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
#include "surveyel/estimators.hpp"
#include "surveyel/simulate.hpp"
#include "surveyel/visibility.hpp"
#include "test_util.hpp"

using namespace surveyel;

namespace {

// Inclusion depends on y and on a latent z that the sample does not carry.
DesignSpec masked_design(Index N) {
    DesignSpec d = testdesigns::poisson_logit(N);
    d.poisson.logit.coefs = {{"x", 0.5}, {"y", 1.5}};
    d.poisson.latent_coef = 1.0;
    d.mask_latent = true;
    return d;
}

struct Tally {
    VectorXd sum = VectorXd::Zero(2), sumsq = VectorXd::Zero(2);
    int n = 0;
    void add(const VectorXd& t) {
        sum += t;
        sumsq += t.cwiseProduct(t);
        ++n;
    }
    VectorXd mean() const { return sum / n; }
    VectorXd sd() const { return ((sumsq / n - mean().cwiseProduct(mean())) * n / (n - 1.0)).cwiseSqrt(); }
};

// Unweighted MLE, CE with gamma-regression visibility and CE with the true
// conditional visibility over independent replicates.
struct Comparison {
    VectorXd theta0;
    Tally mle, ce_gamma, ce_truth;
};

Comparison compare(const DesignSpec& d, const std::vector<std::string>& formula, const std::string& covariate,
                   int reps) {
    const ModelSpec m{Family::kBernoulliLogit, {covariate}, true};
    Comparison c;
    c.theta0 = superpopulation_theta(d, m);
    const ConstraintSpec cons = resolve_constraint_truth(d);
    for (int r = 0; r < reps; ++r) {
        Dataset pop = gen_population(d, 1000 + r);
        Dataset sample = draw_sample(pop, d, 5000 + r);
        REQUIRE(!sample.has_column(kLatentColumn));
        Schema plain = sample.schema();
        plain.weight_source.clear();
        plain.pi.clear();
        EstimateResult u = fit_pl(sample.with_schema(plain), m);
        const ConstraintMatrix cm = build_constraint_matrix(sample, cons);
        VisibilityOptions vo;
        vo.formula = formula;
        vo.use_default_formula = false;
        EstimateResult g = fit_ce(sample, m, cm, estimate_visibility(sample, vo));
        EstimateResult t = fit_ce(sample, m, cm, visibility_from_values(conditional_visibility_truth(d, sample)));
        REQUIRE(u.converged);
        REQUIRE(g.converged);
        REQUIRE(t.converged);
        c.mle.add(u.theta);
        c.ce_gamma.add(g.theta);
        c.ce_truth.add(t.theta);
    }
    MESSAGE("bias MLE " << (c.mle.mean() - c.theta0).transpose() << ", CE gamma "
                        << (c.ce_gamma.mean() - c.theta0).transpose() << ", CE truth "
                        << (c.ce_truth.mean() - c.theta0).transpose() << "; sd CE gamma "
                        << c.ce_gamma.sd().transpose());
    return c;
}

}  // namespace

TEST_CASE("estimated visibility removes most of the informative-sampling bias") {
    // The linear inverse-link weight model only approximates E[pi | x, y] here.
    const int reps = 100;
    Comparison c = compare(masked_design(8000), {"x", "y", "xy"}, "x", reps);
    const VectorXd bias_mle = c.mle.mean() - c.theta0;
    const VectorXd bias_g = c.ce_gamma.mean() - c.theta0;
    const VectorXd bias_t = c.ce_truth.mean() - c.theta0;
    CHECK(std::abs(bias_mle(0)) > 5 * c.mle.sd()(0) / std::sqrt(double(reps)));
    CHECK(bias_g.norm() < 0.1 * bias_mle.norm());
    CHECK((bias_g.array().abs() < c.ce_gamma.sd().array()).all());
    CHECK((bias_t.array().abs() < 4 * c.ce_truth.sd().array() / std::sqrt(double(reps))).all());
}

TEST_CASE("correctly specified weight model matches the true visibility") {
    // E[pi | s] = rate_s is linear in s under the inverse link.
    DesignSpec d;
    d.population_size = 30000;
    CovariateSpec s;
    s.name = "s";
    s.kind = CovariateKind::kBernoulli;
    s.logit.intercept = std::log(0.12 / 0.88);
    CovariateSpec x;
    x.name = "x";
    d.covariates = {s, x};
    d.outcome.predictor.intercept = -1.0;
    d.outcome.predictor.coefs = {{"x", 0.5}, {"s", 1.2}};
    d.design = DesignKind::kTwoStrata;
    d.strata.stratum = "s";
    d.strata.multiplier_lower = 0.3;
    d.strata.multiplier_upper = 1.7;
    d.design_columns = {"s"};
    d.mask_latent = true;
    ConstraintEntry ey;
    ey.target_column = "y";
    d.constraints.entries = {ey};
    const int reps = 100;
    Comparison c = compare(d, {"s"}, "x", reps);
    const VectorXd bias_mle = c.mle.mean() - c.theta0;
    const VectorXd bias_g = c.ce_gamma.mean() - c.theta0;
    CHECK(std::abs(bias_mle(0)) > 5 * c.mle.sd()(0) / std::sqrt(double(reps)));
    CHECK(bias_g.norm() < 0.2 * bias_mle.norm());
    CHECK(((c.ce_gamma.mean() - c.ce_truth.mean()).array().abs() < 0.25 * c.ce_truth.sd().array()).all());
    CHECK((bias_g.array().abs() < 4 * c.ce_gamma.sd().array() / std::sqrt(double(reps))).all());
}

TEST_CASE("monte carlo sweep shows shrinking error and unbiased constrained estimators") {
    MonteCarloSpec spec;
    spec.model = testdesigns::logit_x();
    MCSummary small, large;
    spec.design = testdesigns::poisson_logit(4000);
    small = run_monte_carlo(spec, 150, 11, 1);
    spec.design = testdesigns::poisson_logit(16000);
    large = run_monte_carlo(spec, 150, 12, 1);
    for (Estimator e : {Estimator::kCE, Estimator::kCS, Estimator::kPL}) {
        const auto& a = small.summary(e);
        const auto& b = large.summary(e);
        INFO("estimator " << to_string(e));
        CHECK(a.failures == 0);
        CHECK(b.failures == 0);
        CHECK((a.rmse.array() > 1.4 * b.rmse.array()).all());
        CHECK((b.bias.array().abs() < 4 * b.sd.array() / std::sqrt(150.0)).all());
        // Average plug-in SE tracks the Monte Carlo spread.
        CHECK(((b.mean_se.array() / b.sd.array() - 1).abs() < 0.2).all());
    }
    CHECK(large.mean_sample_size > 3.5 * small.mean_sample_size);
}
