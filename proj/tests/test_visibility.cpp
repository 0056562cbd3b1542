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

#include "surveyel/error.hpp"
#include "surveyel/simulate.hpp"
#include "surveyel/visibility.hpp"
#include "test_util.hpp"

using namespace surveyel;

namespace {

Dataset weighted(const VectorXd& w, const VectorXd& x, const VectorXd* nf = nullptr) {
    Table t{{"w", "x"}, {w, x}};
    if (nf) {
        t.names.emplace_back("n_f");
        t.columns.push_back(*nf);
    }
    Schema s;
    s.weight_source = "w";
    s.weight_mode = WeightMode::kDirect;
    s.covariates = {"x"};
    return Dataset::from_table(std::move(t), s);
}

DesignSpec strata_design(Index N) {
    DesignSpec d;
    d.population_size = N;
    CovariateSpec s;
    s.name = "s";
    s.kind = CovariateKind::kBernoulli;
    s.logit.intercept = std::log(0.12 / 0.88);
    CovariateSpec x;
    x.name = "x";
    d.covariates = {s, x};
    d.outcome.predictor.intercept = -1.0;
    d.outcome.predictor.coefs = {{"x", 0.5}, {"s", 0.8}};
    d.design = DesignKind::kTwoStrata;
    d.strata.stratum = "s";
    d.strata.rate_one = 0.5;
    d.strata.rate_zero = 0.05;
    d.strata.multiplier_lower = 0.3;
    d.strata.multiplier_upper = 1.7;
    d.design_columns = {"s"};
    d.mask_latent = true;
    return d;
}

}  // namespace

TEST_CASE("given pi and supplied values") {
    VectorXd pi(3), y(3);
    pi << 0.2, 0.5, 1.0;
    y << 0, 1, 0;
    Schema s;
    s.response = "y";
    s.weight_source = "pi";
    Dataset data = Dataset::from_table(Table{{"y", "pi"}, {y, pi}}, s);
    VisibilityModel v = visibility_from_pi(data);
    CHECK(v.mode == VisibilityMode::kGivenPi);
    CHECK(v.bp == pi);
    Dataset no_pi = Dataset::from_table(Table{{"y"}, {y}}, Schema{"y", {}, {}, "", WeightMode::kDirect, "", ""});
    CHECK_THROWS_AS(visibility_from_pi(no_pi), InputError);
    VectorXd bad(2);
    bad << 0.3, 0.0;
    CHECK_THROWS_AS(visibility_from_values(bad), InputError);
}

TEST_CASE("intercept-only weight model gives the reciprocal mean weight") {
    std::mt19937_64 rng(4);
    VectorXd w = testutil::uniform_vector(rng, 300, 1.0, 30.0);
    VectorXd x = testutil::normal_vector(rng, 300);
    VisibilityOptions o;
    o.use_default_formula = false;
    VisibilityModel v = estimate_visibility(weighted(w, x), o);
    CHECK(v.mode == VisibilityMode::kGammaRegression);
    CHECK((v.bp.array() - 1.0 / w.mean()).abs().maxCoeff() < 1e-12);
    CHECK(v.alpha.size() == 1);
}

TEST_CASE("family-size adjustment in both orders") {
    std::mt19937_64 rng(8);
    const Index n = 200;
    VectorXd w = testutil::uniform_vector(rng, n, 1.0, 30.0);
    VectorXd x = testutil::normal_vector(rng, n);
    VectorXd nf = (testutil::uniform_vector(rng, n, 0.5, 4.49).array().round()).matrix();
    VisibilityOptions o;
    o.use_default_formula = false;
    o.family_size_column = "n_f";
    VisibilityModel dec = estimate_visibility(weighted(w, x, &nf), o);
    const double m = (w.array() / nf.array()).mean();
    CHECK((dec.bp.array() - 1.0 / (m * nf.array())).abs().maxCoeff() < 1e-12);

    VectorXd wo = testutil::uniform_vector(rng, 500, 1.0, 10.0);
    Dataset original = weighted(wo, testutil::normal_vector(rng, 500));
    o.order = FamilySizeOrder::kOriginal;
    o.original = &original;
    VisibilityModel ori = estimate_visibility(weighted(w, x, &nf), o);
    CHECK((ori.bp.array() - 1.0 / (wo.mean() * nf.array())).abs().maxCoeff() < 1e-12);

    o.original = nullptr;
    CHECK_THROWS_AS(estimate_visibility(weighted(w, x, &nf), o), InputError);
    o.order = FamilySizeOrder::kDeclustered;
    o.family_size_column = "missing";
    CHECK_THROWS_AS(estimate_visibility(weighted(w, x, &nf), o), InputError);
}

TEST_CASE("estimated visibility tracks the known conditional visibility") {
    // pi = rate_s * u with u latent; E_P[pi | s] = rate_s * mean(u).
    DesignSpec d = strata_design(48000);
    Dataset pop = gen_population(d, 17);
    Dataset sample = draw_sample(pop, d, 18);
    REQUIRE(sample.n() > 4500);
    CHECK(!sample.has_column(kLatentColumn));
    VisibilityOptions o;
    o.formula = {"s"};
    o.use_default_formula = false;
    VisibilityModel v = estimate_visibility(sample, o);
    const VectorXd truth = conditional_visibility_truth(d, sample);
    const double rel_rmse = std::sqrt(((v.bp - truth).array() / truth.array()).square().mean());
    CHECK(rel_rmse < 0.05);
    CHECK(truth.minCoeff() == doctest::Approx(0.05));
    CHECK(truth.maxCoeff() == doctest::Approx(0.5));
}

TEST_CASE("default formula uses covariates then design columns") {
    std::mt19937_64 rng(12);
    const Index n = 400;
    VectorXd x = testutil::normal_vector(rng, n);
    VectorXd z = testutil::uniform_vector(rng, n, 0, 1);
    VectorXd w = (1.0 / (2.0 + 0.5 * x.array() + z.array()).cwiseMax(0.5)).matrix();
    Schema s;
    s.weight_source = "w";
    s.weight_mode = WeightMode::kDirect;
    s.covariates = {"x"};
    s.design = {"z"};
    Dataset data = Dataset::from_table(Table{{"w", "x", "z"}, {w, x, z}}, s);
    VisibilityModel v = estimate_visibility(data, {});
    REQUIRE(v.formula.size() == 2);
    CHECK(v.formula[0] == "x");
    CHECK(v.formula[1] == "z");
    CHECK(v.alpha.size() == 3);
}
