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

#include "surveyel/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "surveyel/error.hpp"
#include "json_reader.hpp"

namespace surveyel {

using detail::ObjectReader;

namespace {

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json linear_to_json(const LinearTerm& t) {
    Json j;
    j["intercept"] = t.intercept;
    Json c = Json::object();
    for (const auto& [name, b] : t.coefs) c[name] = b;
    j["coefs"] = c;
    return j;
}

Json derived_to_json(const DerivedSpec& d) {
    Json j;
    switch (d.kind) {
        case DerivedKind::kIndicator:
            j = {{"name", d.name}, {"kind", "indicator"}, {"a", d.a}, {"value", d.value}};
            break;
        case DerivedKind::kProduct: j = {{"name", d.name}, {"kind", "product"}, {"a", d.a}, {"b", d.b}}; break;
        case DerivedKind::kSquare: j = {{"name", d.name}, {"kind", "square"}, {"a", d.a}}; break;
        case DerivedKind::kDummies:
            j = {{"kind", "dummies"}, {"a", d.a}, {"values", d.values}, {"prefix", d.prefix}};
            break;
    }
    return j;
}

std::vector<DerivedSpec> derived_from_json(const nlohmann::json& arr, const std::string& path) {
    if (!arr.is_array()) ObjectReader::fail(path, "expected an array");
    std::vector<DerivedSpec> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        ObjectReader r(arr[i], path + "[" + std::to_string(i) + "]");
        DerivedSpec d;
        const std::string kind = r.str("kind");
        d.a = r.str("a");
        if (kind == "indicator") {
            d.kind = DerivedKind::kIndicator;
            d.name = r.str("name");
            d.value = r.num("value");
        } else if (kind == "product") {
            d.kind = DerivedKind::kProduct;
            d.name = r.str("name");
            d.b = r.str("b");
        } else if (kind == "square") {
            d.kind = DerivedKind::kSquare;
            d.name = r.str("name");
        } else if (kind == "dummies") {
            d.kind = DerivedKind::kDummies;
            d.values = r.numbers("values");
            d.prefix = r.str("prefix", d.a);
            d.name = r.str("name", d.prefix);
        } else {
            ObjectReader::fail(r.child("kind"), "unknown derived kind '" + kind + "'");
        }
        r.finish();
        out.push_back(std::move(d));
    }
    return out;
}

ConstraintSpec constraints_from_json_impl(const nlohmann::json& arr, const std::string& path, bool need_gamma) {
    if (!arr.is_array()) ObjectReader::fail(path, "expected an array");
    ConstraintSpec spec;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        ObjectReader r(arr[i], path + "[" + std::to_string(i) + "]");
        ConstraintEntry e;
        e.kind = parse_constraint_kind(r.str("kind"));
        if (e.kind == ConstraintKind::kSubgroupMoment) {
            e.group_column = r.str("group");
            e.group_value = r.num("value");
        }
        e.target_column = r.str("target");
        e.gamma = need_gamma ? r.num("gamma") : r.num("gamma", 0.0);
        e.label = r.str("label", "");
        r.finish();
        spec.entries.push_back(std::move(e));
    }
    return spec;
}

}  // namespace

Json to_json(const VectorXd& v) {
    Json a = Json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
    return a;
}

Json to_json(const MatrixXd& m) {
    Json a = Json::array();
    for (Index i = 0; i < m.rows(); ++i) a.push_back(to_json(VectorXd(m.row(i).transpose())));
    return a;
}

Json to_json(const EstimateResult& r, bool include_weights) {
    Json j;
    j["estimator"] = to_string(r.estimator);
    j["converged"] = r.converged;
    j["coefficients"] = r.coefficient_names;
    j["theta"] = to_json(r.theta);
    j["se"] = to_json(r.se);
    j["covariance"] = to_json(r.covariance);
    j["constraint_labels"] = r.constraint_labels;
    j["multiplier"] = to_json(r.multiplier);
    j["Bp_hat"] = num(r.bp_hat);
    j["logEL"] = num(r.log_el);
    j["constraint_residuals"] = to_json(r.constraint_residuals);
    const Diagnostics& d = r.diagnostics;
    Json dj;
    dj["el_iterations"] = d.el_iterations;
    dj["el_converged"] = d.el_converged;
    dj["el_residual"] = num(d.el_residual);
    dj["restriction_binding"] = d.restriction_binding;
    dj["newton_iterations"] = d.newton_iterations;
    dj["newton_converged"] = d.newton_converged;
    dj["score_norm"] = num(d.score_norm);
    dj["starts_agree"] = d.starts_agree;
    dj["start_spread"] = num(d.start_spread);
    dj["infeasible_evaluations"] = d.infeasible_evaluations;
    dj["outer_iterations"] = d.outer_iterations;
    dj["failure"] = d.failure;
    dj["warnings"] = d.warnings;
    j["diagnostics"] = dj;
    if (include_weights) {
        j["weights"] = to_json(r.weights);
        j["step1_weights"] = to_json(r.step1_weights);
    }
    return j;
}

Json to_json(const MCSummary& s, bool include_replicates) {
    Json j;
    j["reps"] = s.reps;
    j["seed"] = s.seed;
    j["coefficients"] = s.coefficient_names;
    j["theta_true"] = to_json(s.theta_true);
    j["mean_sample_size"] = num(s.mean_sample_size);
    j["gap_count"] = s.gap_count;
    j["mean_gap_min_eigenvalue"] = num(s.mean_gap_min_eigenvalue);
    j["mean_ce_trace_per_coef"] = num(s.mean_ce_trace_per_coef);
    Json ests = Json::array();
    for (const auto& e : s.estimators) {
        Json ej;
        ej["estimator"] = to_string(e.estimator);
        ej["mean"] = to_json(e.mean);
        ej["bias"] = to_json(e.bias);
        ej["sd"] = to_json(e.sd);
        ej["rmse"] = to_json(e.rmse);
        ej["mean_se"] = to_json(e.mean_se);
        ej["median_se"] = to_json(e.median_se);
        ej["coverage"] = to_json(e.coverage);
        ej["successes"] = e.successes;
        ej["failures"] = e.failures;
        ests.push_back(ej);
    }
    j["estimators"] = ests;
    if (include_replicates) {
        Json reps = Json::array();
        for (const auto& r : s.replicates) {
            Json rj;
            rj["index"] = r.index;
            rj["sample_size"] = r.sample_size;
            rj["failure"] = r.failure;
            Json es = Json::array();
            for (const auto& e : r.estimates) {
                es.push_back({{"ok", e.ok}, {"theta", to_json(e.theta)}, {"se", to_json(e.se)}, {"failure", e.failure}});
            }
            rj["estimates"] = es;
            if (r.has_gap) rj["gap_min_eigenvalue"] = num(r.gap_min_eigenvalue);
            reps.push_back(rj);
        }
        j["replicates"] = reps;
    }
    return j;
}

Json to_json(const ConstraintSpec& spec) {
    Json a = Json::array();
    for (const auto& e : spec.entries) {
        Json j;
        j["kind"] = to_string(e.kind);
        if (e.kind == ConstraintKind::kSubgroupMoment) {
            j["group"] = e.group_column;
            j["value"] = e.group_value;
        }
        j["target"] = e.target_column;
        j["gamma"] = num(e.gamma);
        if (!e.label.empty()) j["label"] = e.label;
        a.push_back(j);
    }
    return a;
}

Json to_json(const DesignSpec& s) {
    Json j;
    j["population_size"] = s.population_size;
    Json covs = Json::array();
    for (const auto& c : s.covariates) {
        Json cj;
        cj["name"] = c.name;
        switch (c.kind) {
            case CovariateKind::kNormal:
                cj["dist"] = "normal";
                cj["mean"] = c.mean;
                cj["sd"] = c.sd;
                break;
            case CovariateKind::kBernoulli:
                cj["dist"] = "bernoulli";
                cj["logit"] = linear_to_json(c.logit);
                break;
            case CovariateKind::kCategorical:
                cj["dist"] = "categorical";
                cj["values"] = c.values;
                cj["probs"] = c.probs;
                break;
            case CovariateKind::kUniform:
                cj["dist"] = "uniform";
                cj["lower"] = c.lower;
                cj["upper"] = c.upper;
                break;
        }
        covs.push_back(cj);
    }
    j["covariates"] = covs;
    Json der = Json::array();
    for (const auto& d : s.derived) der.push_back(derived_to_json(d));
    j["derived"] = der;
    Json out;
    out["name"] = s.outcome.name;
    out["family"] = to_string(s.outcome.family);
    out["predictor"] = linear_to_json(s.outcome.predictor);
    if (s.outcome.family == Family::kGaussianIdentity) out["sd"] = s.outcome.sd;
    if (s.outcome.family == Family::kGammaInverse) out["shape"] = s.outcome.shape;
    j["outcome"] = out;
    Json od = Json::array();
    for (const auto& d : s.outcome_derived) od.push_back(derived_to_json(d));
    j["outcome_derived"] = od;
    Json dj;
    if (s.design == DesignKind::kPoisson) {
        dj["kind"] = "poisson";
        dj["logit"] = linear_to_json(s.poisson.logit);
        dj["floor"] = s.poisson.floor;
        dj["ceiling"] = s.poisson.ceiling;
        dj["latent_coef"] = s.poisson.latent_coef;
    } else {
        dj["kind"] = "two-strata";
        dj["stratum"] = s.strata.stratum;
        dj["rate_one"] = s.strata.rate_one;
        dj["rate_zero"] = s.strata.rate_zero;
        dj["multiplier_lower"] = s.strata.multiplier_lower;
        dj["multiplier_upper"] = s.strata.multiplier_upper;
    }
    j["design"] = dj;
    j["design_columns"] = s.design_columns;
    j["mask_latent"] = s.mask_latent;
    j["constraints"] = to_json(s.constraints);
    j["truth"] = to_string(s.truth);
    j["reference_size"] = s.reference_size;
    j["quadrature_nodes"] = s.quadrature_nodes;
    return j;
}

ConstraintSpec constraints_from_json(const nlohmann::json& arr, const std::string& path) {
    return constraints_from_json_impl(arr, path, true);
}

LinearTerm linear_from_json(const nlohmann::json& j, const std::string& path) {
    ObjectReader r(j, path);
    LinearTerm t;
    t.intercept = r.num("intercept", 0.0);
    if (r.has("coefs")) {
        const auto& c = j.at("coefs");
        if (!c.is_object()) ObjectReader::fail(r.child("coefs"), "expected an object of name: coefficient");
        for (auto it = c.begin(); it != c.end(); ++it) {
            if (!it.value().is_number()) ObjectReader::fail(r.child("coefs." + it.key()), "expected a number");
            t.coefs.emplace_back(it.key(), it.value().get<double>());
        }
    }
    r.finish();
    return t;
}

DesignSpec design_from_json(const nlohmann::json& j, const std::string& path) {
    ObjectReader r(j, path);
    DesignSpec s;
    s.population_size = r.integer("population_size");
    const auto& covs = r.at("covariates");
    if (!covs.is_array()) ObjectReader::fail(r.child("covariates"), "expected an array");
    for (std::size_t i = 0; i < covs.size(); ++i) {
        ObjectReader c(covs[i], r.child("covariates") + "[" + std::to_string(i) + "]");
        CovariateSpec cs;
        cs.name = c.str("name");
        const std::string dist = c.str("dist");
        if (dist == "normal") {
            cs.kind = CovariateKind::kNormal;
            cs.mean = c.num("mean", 0.0);
            cs.sd = c.num("sd", 1.0);
        } else if (dist == "bernoulli") {
            cs.kind = CovariateKind::kBernoulli;
            if (c.has("p")) {
                const double p = c.num("p");
                if (!(p > 0 && p < 1)) ObjectReader::fail(c.child("p"), "must lie in (0, 1)");
                cs.logit.intercept = std::log(p / (1 - p));
            } else {
                cs.logit = linear_from_json(c.at("logit"), c.child("logit"));
            }
        } else if (dist == "categorical") {
            cs.kind = CovariateKind::kCategorical;
            cs.values = c.numbers("values");
            cs.probs = c.numbers("probs");
        } else if (dist == "uniform") {
            cs.kind = CovariateKind::kUniform;
            cs.lower = c.num("lower", 0.0);
            cs.upper = c.num("upper", 1.0);
        } else {
            ObjectReader::fail(c.child("dist"), "unknown distribution '" + dist + "'");
        }
        c.finish();
        s.covariates.push_back(std::move(cs));
    }
    if (r.has("derived")) s.derived = derived_from_json(j.at("derived"), r.child("derived"));
    {
        ObjectReader o(r.at("outcome"), r.child("outcome"));
        s.outcome.name = o.str("name", "y");
        s.outcome.family = parse_family(o.str("family"));
        s.outcome.predictor = linear_from_json(o.at("predictor"), o.child("predictor"));
        s.outcome.sd = o.num("sd", 1.0);
        s.outcome.shape = o.num("shape", 5.0);
        o.finish();
    }
    if (r.has("outcome_derived")) {
        s.outcome_derived = derived_from_json(j.at("outcome_derived"), r.child("outcome_derived"));
    }
    {
        ObjectReader d(r.at("design"), r.child("design"));
        const std::string kind = d.str("kind");
        if (kind == "poisson") {
            s.design = DesignKind::kPoisson;
            s.poisson.logit = linear_from_json(d.at("logit"), d.child("logit"));
            s.poisson.floor = d.num("floor", 0.0);
            s.poisson.ceiling = d.num("ceiling", 1.0);
            s.poisson.latent_coef = d.num("latent_coef", 0.0);
        } else if (kind == "two-strata") {
            s.design = DesignKind::kTwoStrata;
            s.strata.stratum = d.str("stratum");
            s.strata.rate_one = d.num("rate_one");
            s.strata.rate_zero = d.num("rate_zero");
            s.strata.multiplier_lower = d.num("multiplier_lower", 1.0);
            s.strata.multiplier_upper = d.num("multiplier_upper", 1.0);
        } else {
            ObjectReader::fail(d.child("kind"), "unknown design kind '" + kind + "'");
        }
        d.finish();
    }
    if (r.has("design_columns")) s.design_columns = r.strings("design_columns");
    s.mask_latent = r.boolean("mask_latent", false);
    s.truth = parse_truth_mode(r.str("truth", "exact"));
    if (r.has("constraints")) {
        s.constraints = constraints_from_json_impl(j.at("constraints"), r.child("constraints"),
                                                   s.truth == TruthMode::kSupplied);
    }
    s.reference_size = r.integer("reference_size", s.reference_size);
    s.quadrature_nodes = static_cast<int>(r.integer("quadrature_nodes", s.quadrature_nodes));
    r.finish();
    validate_design(s);
    return s;
}

nlohmann::json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t end = std::min(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string what = e.what();
        const auto pos = what.find("parse error");
        throw InputError("cli", "parse_config",
                         source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON (" +
                             (pos == std::string::npos ? what : what.substr(pos)) + ")");
    }
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cli", "parse_config", "cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_json_text(ss.str(), path);
}

void write_json_file(const std::string& path, const Json& j) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cli", "write_json", "cannot open '" + path + "' for writing");
    f << j.dump(2) << '\n';
    if (!f) throw InputError("cli", "write_json", "write failed for '" + path + "'");
}

}  // namespace surveyel
