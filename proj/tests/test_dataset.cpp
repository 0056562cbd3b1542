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

#include <functional>
#include <map>

#include "surveyel/constraints.hpp"
#include "surveyel/dataset.hpp"
#include "surveyel/error.hpp"
#include "test_util.hpp"

using namespace surveyel;

namespace {

Schema ya_pi() {
    Schema s;
    s.response = "y";
    s.covariates = {"a"};
    s.weight_source = "pi";
    return s;
}

Dataset table_dataset(std::vector<std::string> names, std::vector<VectorXd> cols, Schema s) {
    Table t{std::move(names), std::move(cols)};
    return Dataset::from_table(std::move(t), std::move(s));
}

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("three-row CSV loads with renormalized d") {
    auto dir = testutil::scratch_dir("ds");
    auto path = testutil::write_text(dir / "a.csv", "y,a,pi\n1,0.5,0.5\n0,1.5,0.25\n1,-2,0.25\n");
    Dataset d = load_dataset(path, ya_pi());
    CHECK(d.n() == 3);
    CHECK(d.d().sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(d.d()(0) == doctest::Approx(0.2));
    CHECK(d.d()(1) == doctest::Approx(0.4));
    CHECK(d.y()(2) == 1.0);
    CHECK(d.column("a")(2) == -2.0);
    REQUIRE(d.pi());
    CHECK((*d.pi())(1) == 0.25);
}

TEST_CASE("zero inclusion probability is rejected") {
    auto dir = testutil::scratch_dir("ds");
    auto path = testutil::write_text(dir / "a.csv", "y,a,pi\n1,0.5,0.5\n0,1.5,0\n");
    CHECK(error_of([&] { load_dataset(path, ya_pi()); }).find("nonpositive inclusion probability") !=
          std::string::npos);
}

TEST_CASE("missing tagged response names the column") {
    auto dir = testutil::scratch_dir("ds");
    auto path = testutil::write_text(dir / "a.csv", "outcome,a,pi\n1,0.5,0.5\n");
    const std::string msg = error_of([&] { load_dataset(path, ya_pi()); });
    CHECK(msg.find("schema error") != std::string::npos);
    CHECK(msg.find("'y'") != std::string::npos);
}

TEST_CASE("CSV parse errors carry line numbers") {
    auto dir = testutil::scratch_dir("ds");
    auto p1 = testutil::write_text(dir / "b.csv", "y,a,pi\n1,0.5,0.5\n0,abc,0.5\n");
    CHECK(error_of([&] { read_csv(p1); }).find("line 3") != std::string::npos);
    auto p2 = testutil::write_text(dir / "c.csv", "y,a,pi\n1,0.5\n");
    CHECK_THROWS_AS(read_csv(p2), InputError);
    auto p3 = testutil::write_text(dir / "d.csv", "y,y\n1,2\n");
    CHECK(error_of([&] { read_csv(p3); }).find("duplicate") != std::string::npos);
}

TEST_CASE("write_csv round-trips doubles exactly") {
    auto dir = testutil::scratch_dir("ds");
    std::mt19937_64 rng(3);
    Table t{{"u", "v"}, {testutil::normal_vector(rng, 50, 1e3), testutil::uniform_vector(rng, 50, 1e-9, 1.0)}};
    write_csv((dir / "r.csv").string(), t);
    Table back = read_csv((dir / "r.csv").string());
    REQUIRE(back.names == t.names);
    CHECK(back.columns[0] == t.columns[0]);
    CHECK(back.columns[1] == t.columns[1]);
}

TEST_CASE("normalize_design_weights") {
    VectorXd pi(3);
    pi << 0.5, 0.25, 0.25;
    VectorXd d = normalize_design_weights(pi, WeightMode::kInverseProbability);
    CHECK(d(0) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(d(1) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(d(2) == doctest::Approx(0.4).epsilon(1e-15));

    VectorXd eq = VectorXd::Constant(7, 0.3);
    VectorXd de = normalize_design_weights(eq, WeightMode::kInverseProbability);
    CHECK((de.array() - 1.0 / 7.0).abs().maxCoeff() < 1e-15);

    VectorXd w(3);
    w << 2, 3, 5;
    VectorXd dd = normalize_design_weights(w, WeightMode::kDirect);
    CHECK(dd(0) == doctest::Approx(0.2));
    CHECK(dd(1) == doctest::Approx(0.3));
    CHECK(dd(2) == doctest::Approx(0.5));

    // Scale invariance.
    std::mt19937_64 rng(11);
    VectorXd p = testutil::uniform_vector(rng, 40, 0.01, 0.9);
    VectorXd a = normalize_design_weights(p, WeightMode::kInverseProbability);
    VectorXd b = normalize_design_weights(0.37 * p, WeightMode::kInverseProbability);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-15);

    VectorXd bad(2);
    bad << 1.0, -1.0;
    CHECK_THROWS_AS(normalize_design_weights(bad, WeightMode::kDirect), InputError);
    CHECK_THROWS_AS(normalize_design_weights(VectorXd::Zero(3), WeightMode::kDirect), InputError);
}

TEST_CASE("dataset invariants on random weights") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const Index n = 5 + rep * 3;
        Schema s;
        s.weight_source = "w";
        s.weight_mode = WeightMode::kDirect;
        Dataset d = table_dataset({"w"}, {testutil::uniform_vector(rng, n, 0.1, 50.0)}, s);
        CHECK(std::abs(d.d().sum() - 1.0) < 1e-12);
        CHECK(d.d().minCoeff() > 0.0);
    }
}

TEST_CASE("constraint matrix entries") {
    VectorXd age(4), B(4), x(4);
    age << 20, 20, 21, 19;
    B << 1, 0, 1, 0;
    x << 1, 2, 3, 2;
    Dataset data = table_dataset({"age", "B", "x"}, {age, B, x}, Schema{});
    ConstraintSpec spec;
    spec.entries.push_back({ConstraintKind::kSubgroupMoment, "age", 20, "B", 0.1, ""});
    spec.entries.push_back({ConstraintKind::kGeneralMoment, "", 0, "x", 2.0, ""});
    spec.entries.push_back({ConstraintKind::kSubgroupMoment, "age", 35, "B", 0.2, ""});
    ConstraintMatrix cm = build_constraint_matrix(data, spec);
    REQUIRE(cm.q() == 3);
    CHECK(cm.H(0, 0) == doctest::Approx(0.9));
    CHECK(cm.H(1, 0) == doctest::Approx(-0.1));
    CHECK(cm.H(2, 0) == 0.0);
    CHECK(cm.H(0, 1) == -1.0);
    CHECK(cm.H(1, 1) == 0.0);
    CHECK(cm.H(2, 1) == 1.0);
    CHECK(!cm.vacuous[0]);
    CHECK(cm.vacuous[2]);
    CHECK(cm.active().cols() == 2);
    CHECK(cm.labels.size() == 3);

    ConstraintMatrix none = build_constraint_matrix(data, ConstraintSpec{});
    CHECK(none.q() == 0);
    CHECK(none.n() == 4);

    ConstraintSpec bad;
    bad.entries.push_back({ConstraintKind::kGeneralMoment, "", 0, "nope", 0.0, ""});
    CHECK_THROWS_AS(build_constraint_matrix(data, bad), InputError);
    CHECK_THROWS_AS(validate_constraints(bad, data.names()), InputError);
    CHECK_THROWS_AS(parse_constraint_kind("ratio"), InputError);
}

TEST_CASE("decluster mechanics") {
    VectorXd fam(4), pi(4), y(4);
    fam << 1, 1, 1, 2;
    pi << 0.5, 0.5, 0.5, 0.25;
    y << 1, 2, 3, 4;
    Schema s;
    s.response = "y";
    s.weight_source = "pi";
    s.family = "fam";
    Dataset data = table_dataset({"fam", "pi", "y"}, {fam, pi, y}, s);
    Dataset out = decluster(data, 9);
    REQUIRE(out.n() == 2);
    CHECK(out.column("n_f")(0) == 3.0);
    CHECK(out.column("n_f")(1) == 1.0);
    CHECK(out.column("decluster_weight")(0) == doctest::Approx(6.0));
    CHECK(out.column("decluster_weight")(1) == doctest::Approx(4.0));
    CHECK(out.d()(0) == doctest::Approx(0.6));
    CHECK_THROWS_AS(decluster(data.with_schema(Schema{}), 1), InputError);

    // Singleton families leave the data unchanged.
    VectorXd f2(3), p2(3);
    f2 << 1, 2, 3;
    p2 << 0.2, 0.4, 0.5;
    Schema s2;
    s2.weight_source = "pi";
    s2.family = "fam";
    Dataset single = table_dataset({"fam", "pi"}, {f2, p2}, s2);
    Dataset same = decluster(single, 4);
    CHECK(same.n() == 3);
    CHECK((same.d() - single.d()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("decluster selection frequencies and expected weight") {
    VectorXd fam(5), w(5), id(5);
    fam << 7, 7, 7, 8, 8;
    w << 1.0, 2.0, 4.0, 3.0, 5.0;
    id << 0, 1, 2, 3, 4;
    Schema s;
    s.weight_source = "w";
    s.weight_mode = WeightMode::kDirect;
    s.family = "fam";
    Dataset data = table_dataset({"fam", "w", "id"}, {fam, w, id}, s);
    std::map<int, int> counts;
    double total = 0.0;
    const int reps = 10000;
    for (int seed = 0; seed < reps; ++seed) {
        Dataset out = decluster(data, static_cast<std::uint64_t>(seed));
        counts[static_cast<int>(out.column("id")(0))]++;
        total += out.column("decluster_weight").sum();
    }
    for (int k = 0; k < 3; ++k) CHECK(std::abs(counts[k] / double(reps) - 1.0 / 3.0) < 0.02);
    // Expected survivor weight equals the family's total.
    CHECK(std::abs(total / reps / w.sum() - 1.0) < 0.01);
}
