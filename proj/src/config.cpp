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

#include "surveyel/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "surveyel/error.hpp"
#include "surveyel/json_io.hpp"
#include "json_reader.hpp"

namespace surveyel {

using detail::ObjectReader;
namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& base, const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute() || base.empty()) return p;
    return (fs::path(base) / p).lexically_normal().string();
}

void require_columns(const std::vector<std::string>& have, const std::vector<std::string>& want,
                     const std::string& where) {
    for (const auto& w : want) {
        if (w.empty()) continue;
        if (std::find(have.begin(), have.end(), w) == have.end()) {
            ObjectReader::fail(where, "column '" + w + "' not found");
        }
    }
}

Schema parse_schema(ObjectReader& r) {
    Schema s;
    s.response = r.str("response", "");
    if (r.has("covariates")) s.covariates = r.strings("covariates");
    if (r.has("design")) s.design = r.strings("design");
    s.weight_source = r.str("weight", "");
    const std::string mode = r.str("weight_mode", "inverse-probability");
    if (mode == "inverse-probability") s.weight_mode = WeightMode::kInverseProbability;
    else if (mode == "direct") s.weight_mode = WeightMode::kDirect;
    else ObjectReader::fail(r.child("weight_mode"), "expected 'inverse-probability' or 'direct'");
    s.pi = r.str("pi", "");
    s.family = r.str("family", "");
    return s;
}

}  // namespace

std::vector<std::string> read_csv_header(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cli", "parse_config", "cannot open data file '" + path + "'");
    std::string line;
    std::getline(f, line);
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

std::vector<std::string> design_column_names(const DesignSpec& spec) {
    std::vector<std::string> out;
    auto add_derived = [&](const std::vector<DerivedSpec>& ds) {
        for (const auto& d : ds) {
            if (d.kind == DerivedKind::kDummies) {
                for (double v : d.values) out.push_back(d.prefix + std::to_string(static_cast<long long>(std::llround(v))));
            } else {
                out.push_back(d.name);
            }
        }
    };
    for (const auto& c : spec.covariates) out.push_back(c.name);
    add_derived(spec.derived);
    out.push_back(spec.outcome.name);
    add_derived(spec.outcome_derived);
    if (!spec.mask_latent) {
        out.emplace_back(kLatentColumn);
        out.emplace_back(kPiColumn);
    } else {
        out.emplace_back(kWeightColumn);
    }
    return out;
}

RunConfig parse_config_text(const std::string& text, const std::string& source, const std::string& base_dir) {
    const nlohmann::json j = parse_json_text(text, source);
    ObjectReader r(j, "");
    RunConfig c;
    c.source = source;

    if (r.has("data")) {
        ObjectReader d(j.at("data"), "data");
        DataConfig dc;
        dc.path = resolve(base_dir, d.str("path"));
        dc.schema = parse_schema(d);
        d.finish();
        c.data = std::move(dc);
    }
    if (r.has("model")) {
        ObjectReader m(j.at("model"), "model");
        ModelSpec ms;
        try {
            ms.family = parse_family(m.str("family"));
        } catch (const InputError& e) {
            ObjectReader::fail("model.family", e.detail());
        }
        ms.terms = m.strings("terms");
        ms.intercept = m.boolean("intercept", true);
        m.finish();
        c.model = std::move(ms);
    }
    if (r.has("constraints")) c.constraints = constraints_from_json(j.at("constraints"), "constraints");
    if (r.has("visibility")) {
        ObjectReader v(j.at("visibility"), "visibility");
        const std::string mode = v.str("mode", "given-pi");
        if (mode == "given-pi") c.visibility.mode = VisibilityMode::kGivenPi;
        else if (mode == "gamma-regression") c.visibility.mode = VisibilityMode::kGammaRegression;
        else if (mode == "supplied") c.visibility.mode = VisibilityMode::kSupplied;
        else ObjectReader::fail("visibility.mode", "expected given-pi, gamma-regression or supplied");
        if (v.has("formula")) c.visibility.formula = v.strings("formula");
        c.visibility.intercept = v.boolean("intercept", true);
        c.visibility.column = v.str("column", "");
        c.visibility.nf_adjust = v.boolean("nf_adjust", false);
        c.visibility.family_size_column = v.str("family_size_column", c.visibility.family_size_column);
        const std::string order = v.str("family_size_order", "declustered");
        if (order == "declustered") c.visibility.order = FamilySizeOrder::kDeclustered;
        else if (order == "original") c.visibility.order = FamilySizeOrder::kOriginal;
        else ObjectReader::fail("visibility.family_size_order", "expected 'declustered' or 'original'");
        c.visibility.original_path = resolve(base_dir, v.str("original_data", ""));
        v.finish();
        if (c.visibility.mode == VisibilityMode::kSupplied && c.visibility.column.empty()) {
            ObjectReader::fail("visibility", "supplied mode needs 'column'");
        }
        if (c.visibility.nf_adjust && c.visibility.order == FamilySizeOrder::kOriginal &&
            c.visibility.original_path.empty()) {
            ObjectReader::fail("visibility", "family_size_order 'original' needs 'original_data'");
        }
    }
    if (r.has("estimators")) {
        for (const auto& s : r.strings("estimators")) {
            try {
                const Estimator e = parse_estimator(s);
                if (std::find(c.estimators.begin(), c.estimators.end(), e) != c.estimators.end()) {
                    ObjectReader::fail("estimators", "duplicate estimator '" + s + "'");
                }
                c.estimators.push_back(e);
            } catch (const InputError& e) {
                if (e.module() == "cli") throw;
                ObjectReader::fail("estimators", e.detail());
            }
        }
        if (c.estimators.empty()) ObjectReader::fail("estimators", "estimator set is empty");
    }
    {
        const std::string method = r.str("ce_method", "two-step");
        if (method == "two-step") c.ce_method = CeMethod::kTwoStep;
        else if (method == "joint") c.ce_method = CeMethod::kJoint;
        else ObjectReader::fail("ce_method", "expected 'two-step' or 'joint'");
    }
    if (r.has("solver")) {
        ObjectReader s(j.at("solver"), "solver");
        c.fit.el.tolerance = s.num("el_tolerance", c.fit.el.tolerance);
        c.fit.el.max_iterations = static_cast<int>(s.integer("el_max_iterations", c.fit.el.max_iterations));
        c.fit.newton.tolerance = s.num("newton_tolerance", c.fit.newton.tolerance);
        c.fit.newton.max_iterations = static_cast<int>(s.integer("newton_max_iterations", c.fit.newton.max_iterations));
        c.fit.newton.starts = static_cast<int>(s.integer("newton_starts", c.fit.newton.starts));
        c.fit.newton.jitter = s.num("newton_jitter", c.fit.newton.jitter);
        c.fit.compute_covariance = s.boolean("compute_covariance", true);
        if (s.has("plugin_rule")) {
            try {
                c.fit.rule = parse_plugin_rule(s.str("plugin_rule"));
            } catch (const InputError& e) {
                ObjectReader::fail("solver.plugin_rule", e.detail());
            }
        }
        c.profile_max_iterations = static_cast<int>(s.integer("profile_max_iterations", c.profile_max_iterations));
        c.profile_gradient_tolerance = s.num("profile_gradient_tolerance", c.profile_gradient_tolerance);
        s.finish();
        if (!(c.fit.el.tolerance > 0) || !(c.fit.newton.tolerance > 0) || c.fit.el.max_iterations < 1 ||
            c.fit.newton.max_iterations < 1 || c.fit.newton.starts < 1 || c.profile_max_iterations < 1 ||
            !(c.profile_gradient_tolerance > 0)) {
            ObjectReader::fail("solver", "tolerances must be positive and iteration limits at least 1");
        }
    }
    if (r.has("seed")) {
        const auto& s = j.at("seed");
        if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<long long>() < 0)) {
            ObjectReader::fail("seed", "expected a nonnegative integer");
        }
        c.seed = s.get<std::uint64_t>();
    }
    if (r.has("output")) {
        ObjectReader o(j.at("output"), "output");
        c.output.path = resolve(base_dir, o.str("path", c.output.path));
        c.output.format = o.str("format", c.output.format);
        o.finish();
        if (c.output.format != "json+csv" && c.output.format != "json" && c.output.format != "csv") {
            ObjectReader::fail("output.format", "expected json+csv, json or csv");
        }
    } else {
        c.output.path = resolve(base_dir, c.output.path);
    }
    if (r.has("simulation")) c.simulation = design_from_json(j.at("simulation"), "simulation");
    if (r.has("monte_carlo")) {
        ObjectReader m(j.at("monte_carlo"), "monte_carlo");
        c.mc.reps = static_cast<int>(m.integer("reps", c.mc.reps));
        c.mc.jobs = static_cast<int>(m.integer("jobs", c.mc.jobs));
        try {
            c.mc.visibility = parse_visibility_source(m.str("visibility", "given-pi"));
        } catch (const InputError& e) {
            ObjectReader::fail("monte_carlo.visibility", e.detail());
        }
        if (m.has("visibility_formula")) c.mc.visibility_formula = m.strings("visibility_formula");
        if (m.has("theta_true")) {
            const auto v = m.numbers("theta_true");
            c.mc.theta_true = Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
        }
        c.mc.fixed_population = m.boolean("fixed_population", false);
        c.mc.write_replicates = m.boolean("write_replicates", false);
        m.finish();
        if (c.mc.reps < 1) ObjectReader::fail("monte_carlo.reps", "must be at least 1");
        if (c.mc.jobs < 0) ObjectReader::fail("monte_carlo.jobs", "must be nonnegative");
    }
    r.finish();

    // Cross-section validation against the available column names.
    std::vector<std::string> columns;
    if (c.data) {
        columns = read_csv_header(c.data->path);
        const Schema& s = c.data->schema;
        require_columns(columns, {s.response, s.weight_source, s.pi, s.family}, "data");
        require_columns(columns, s.covariates, "data.covariates");
        require_columns(columns, s.design, "data.design");
    } else if (c.simulation) {
        columns = design_column_names(*c.simulation);
    }
    if (!columns.empty()) {
        if (c.model) require_columns(columns, c.model->terms, "model.terms");
        try {
            validate_constraints(c.constraints, columns);
        } catch (const InputError& e) {
            ObjectReader::fail("constraints", e.detail());
        }
        require_columns(columns, c.visibility.formula, "visibility.formula");
        require_columns(columns, {c.visibility.column}, "visibility.column");
        if (c.visibility.nf_adjust && c.data) {
            require_columns(columns, {c.visibility.family_size_column}, "visibility.family_size_column");
        }
        if (c.simulation) require_columns(columns, c.mc.visibility_formula, "monte_carlo.visibility_formula");
    }
    if (c.data && c.model && c.data->schema.response.empty()) {
        ObjectReader::fail("data", "a model needs a 'response' column");
    }
    if (c.mc.theta_true && c.model && c.mc.theta_true->size() != c.model->p()) {
        ObjectReader::fail("monte_carlo.theta_true", "length does not match the model");
    }
    if (c.mc.visibility == VisibilitySource::kGivenPi && c.simulation && c.simulation->mask_latent &&
        std::find(c.estimators.begin(), c.estimators.end(), Estimator::kCE) != c.estimators.end()) {
        ObjectReader::fail("monte_carlo.visibility", "given-pi is unavailable when the latent design is masked");
    }
    return c;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cli", "parse_config", "cannot open config '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string base = fs::path(path).parent_path().string();
    return parse_config_text(ss.str(), path, base);
}

}  // namespace surveyel
