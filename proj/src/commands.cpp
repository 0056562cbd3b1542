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

#include "surveyel/commands.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>

#include "surveyel/error.hpp"
#include "surveyel/json_io.hpp"
#include "surveyel/log.hpp"
#include "surveyel/simulate.hpp"
#include "format.hpp"

namespace surveyel {

namespace fs = std::filesystem;

Command parse_command(const std::string& s) {
    if (s == "fit") return Command::kFit;
    if (s == "simulate") return Command::kSimulate;
    if (s == "mc") return Command::kMc;
    if (s == "decluster") return Command::kDecluster;
    throw InputError("cli", "run_command", "unknown command '" + s + "'");
}

std::string to_string(Command c) {
    switch (c) {
        case Command::kFit: return "fit";
        case Command::kSimulate: return "simulate";
        case Command::kMc: return "mc";
        case Command::kDecluster: return "decluster";
    }
    return "?";
}

namespace {

const char* kOp = "run_command";

void need(bool ok, const std::string& what, Command c) {
    if (!ok) throw InputError("cli", kOp, "command '" + to_string(c) + "' needs " + what);
}

bool want_json(const RunConfig& c) { return c.output.format != "csv"; }
bool want_csv(const RunConfig& c) { return c.output.format != "json"; }

std::string out_file(const RunConfig& c, const std::string& name) {
    return (fs::path(c.output.path) / name).string();
}

std::pair<std::uint64_t, std::uint64_t> split_seed(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32), 0x51u};
    std::uint32_t o[4];
    seq.generate(o, o + 4);
    return {(static_cast<std::uint64_t>(o[0]) << 32) | o[1], (static_cast<std::uint64_t>(o[2]) << 32) | o[3]};
}

EstimateResult failed_result(Estimator e, const ModelSpec& model, const ConstraintMatrix& cm, const Error& err) {
    EstimateResult r;
    r.estimator = e;
    r.coefficient_names = model.coefficient_names();
    r.constraint_labels = cm.labels;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.theta = VectorXd::Constant(model.p(), nan);
    r.se = r.theta;
    r.covariance = MatrixXd::Constant(model.p(), model.p(), nan);
    r.converged = false;
    r.diagnostics.failure = err.what();
    return r;
}

Json visibility_json(const VisibilityModel& v) {
    Json j;
    j["mode"] = to_string(v.mode);
    if (v.mode == VisibilityMode::kGammaRegression) {
        j["formula"] = v.formula;
        j["intercept"] = v.intercept;
        j["alpha"] = to_json(v.alpha);
        j["deviance"] = v.deviance;
        j["dispersion"] = v.dispersion;
        j["iterations"] = v.iterations;
    }
    j["bp"] = to_json(v.bp);
    return j;
}

int cmd_fit(const RunConfig& c) {
    need(c.data.has_value(), "a 'data' section", Command::kFit);
    need(c.model.has_value(), "a 'model' section", Command::kFit);
    need(!c.estimators.empty(), "a nonempty 'estimators' list", Command::kFit);
    const Dataset data = load_dataset(c.data->path, c.data->schema);
    const ModelSpec& model = *c.model;
    const ConstraintMatrix cm =
        c.constraints.empty() ? ConstraintMatrix::none(data.n()) : build_constraint_matrix(data, c.constraints);

    std::optional<VisibilityModel> vis;
    std::optional<Dataset> original;
    auto visibility = [&]() -> const VisibilityModel& {
        if (vis) return *vis;
        switch (c.visibility.mode) {
            case VisibilityMode::kGivenPi: vis = visibility_from_pi(data); break;
            case VisibilityMode::kSupplied: vis = visibility_from_values(data.column(c.visibility.column)); break;
            case VisibilityMode::kGammaRegression: {
                VisibilityOptions vo;
                vo.formula = c.visibility.formula;
                vo.use_default_formula = c.visibility.formula.empty();
                vo.intercept = c.visibility.intercept;
                if (c.visibility.nf_adjust) {
                    vo.family_size_column = c.visibility.family_size_column;
                    vo.order = c.visibility.order;
                    if (vo.order == FamilySizeOrder::kOriginal) {
                        original = load_dataset(c.visibility.original_path, c.data->schema);
                        vo.original = &*original;
                    }
                }
                vis = estimate_visibility(data, vo);
                break;
            }
        }
        return *vis;
    };

    std::vector<EstimateResult> fits;
    for (Estimator e : c.estimators) {
        try {
            switch (e) {
                case Estimator::kPL: fits.push_back(fit_pl(data, model, c.fit)); break;
                case Estimator::kCS: fits.push_back(fit_cs(data, model, cm, c.fit)); break;
                case Estimator::kCE:
                    if (c.ce_method == CeMethod::kJoint) {
                        ProfileOptions po;
                        po.fit = c.fit;
                        po.max_iterations = c.profile_max_iterations;
                        po.gradient_tolerance = c.profile_gradient_tolerance;
                        fits.push_back(profile_fit_joint(data, model, cm, visibility(), po));
                    } else {
                        fits.push_back(fit_ce(data, model, cm, visibility(), c.fit));
                    }
                    break;
            }
        } catch (const InputError&) {
            throw;
        } catch (const Error& err) {
            log::warn(std::string("cli/fit: ") + to_string(e) + " failed: " + err.what());
            fits.push_back(failed_result(e, model, cm, err));
        }
    }

    fs::create_directories(c.output.path);
    bool all_ok = true;
    if (want_json(c)) {
        Json j;
        j["command"] = "fit";
        j["data"] = c.data->path;
        j["n"] = data.n();
        j["family"] = to_string(model.family);
        j["constraints"] = to_json(c.constraints);
        if (vis) j["visibility"] = visibility_json(*vis);
        Json blocks;
        for (const auto& f : fits) blocks[to_string(f.estimator)] = to_json(f);
        j["estimators"] = blocks;
        write_json_file(out_file(c, "results.json"), j);
    }
    std::ofstream csv;
    if (want_csv(c)) {
        csv.open(out_file(c, "coefficients.csv"), std::ios::binary);
        if (!csv) throw InputError("cli", kOp, "cannot write coefficients.csv");
        csv << "estimator,coefficient,theta,se,converged\n";
    }
    for (const auto& f : fits) {
        all_ok = all_ok && f.converged;
        if (!csv.is_open()) continue;
        for (std::size_t k = 0; k < f.coefficient_names.size(); ++k) {
            const Index i = static_cast<Index>(k);
            csv << to_string(f.estimator) << ',' << f.coefficient_names[k] << ',' << fmt17(f.theta(i)) << ','
                << fmt17(f.se.size() > i ? f.se(i) : std::numeric_limits<double>::quiet_NaN()) << ','
                << (f.converged ? 1 : 0) << '\n';
        }
    }
    return all_ok ? kExitOk : kExitConvergence;
}

int cmd_simulate(const RunConfig& c) {
    need(c.simulation.has_value(), "a 'simulation' section", Command::kSimulate);
    need(c.seed.has_value(), "a seed", Command::kSimulate);
    const auto [pop_seed, sample_seed] = split_seed(*c.seed);
    const Dataset pop = gen_population(*c.simulation, pop_seed);
    const Dataset sample = draw_sample(pop, *c.simulation, sample_seed);
    DesignSpec resolved = *c.simulation;
    resolved.constraints = resolve_constraint_truth(*c.simulation, &pop, *c.seed);
    fs::create_directories(c.output.path);
    write_csv(out_file(c, "population.csv"), pop.table());
    write_csv(out_file(c, "sample.csv"), sample.table());
    Json j;
    j["command"] = "simulate";
    j["seed"] = *c.seed;
    j["population_size"] = pop.n();
    j["sample_size"] = sample.n();
    j["design"] = to_json(resolved);
    j["constraints"] = to_json(resolved.constraints);
    write_json_file(out_file(c, "simulation.json"), j);
    return kExitOk;
}

int cmd_mc(const RunConfig& c, const Overrides& ov) {
    need(c.simulation.has_value(), "a 'simulation' section", Command::kMc);
    need(c.model.has_value(), "a 'model' section", Command::kMc);
    need(!c.estimators.empty(), "a nonempty 'estimators' list", Command::kMc);
    need(c.seed.has_value(), "a seed", Command::kMc);
    MonteCarloSpec spec;
    spec.design = *c.simulation;
    spec.model = *c.model;
    spec.theta_true = c.mc.theta_true;
    spec.estimators = c.estimators;
    spec.visibility = c.mc.visibility;
    spec.visibility_formula = c.mc.visibility_formula;
    spec.fixed_population = c.mc.fixed_population;
    spec.fit = c.fit;
    const int reps = ov.reps.value_or(c.mc.reps);
    const int jobs = ov.jobs.value_or(c.mc.jobs);
    if (reps < 1) throw InputError("cli", kOp, "reps must be at least 1");
    const MCSummary s = run_monte_carlo(spec, reps, *c.seed, jobs);
    fs::create_directories(c.output.path);
    if (want_csv(c)) write_mc_csv(out_file(c, "mc_summary.csv"), s);
    if (want_json(c)) write_json_file(out_file(c, "mc_summary.json"), to_json(s, c.mc.write_replicates));
    return kExitOk;
}

int cmd_decluster(const RunConfig& c) {
    need(c.data.has_value(), "a 'data' section", Command::kDecluster);
    need(!c.data->schema.family.empty(), "a 'family' column in the data section", Command::kDecluster);
    need(c.seed.has_value(), "a seed", Command::kDecluster);
    const Dataset data = load_dataset(c.data->path, c.data->schema);
    const Dataset out = decluster(data, *c.seed);
    fs::create_directories(c.output.path);
    write_csv(out_file(c, "declustered.csv"), out.table());
    return kExitOk;
}

}  // namespace

int run_command(Command command, RunConfig config, const Overrides& ov, std::ostream& err) {
    try {
        if (ov.seed) config.seed = ov.seed;
        if (ov.out) config.output.path = *ov.out;
        switch (command) {
            case Command::kFit: return cmd_fit(config);
            case Command::kSimulate: return cmd_simulate(config);
            case Command::kMc: return cmd_mc(config, ov);
            case Command::kDecluster: return cmd_decluster(config);
        }
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConvergence;
    } catch (const fs::filesystem_error& e) {
        err << "error: cli/run_command: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}

}  // namespace surveyel
