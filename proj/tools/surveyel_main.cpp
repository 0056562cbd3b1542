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

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "surveyel/commands.hpp"
#include "surveyel/config.hpp"
#include "surveyel/error.hpp"

int main(int argc, char** argv) {
    CLI::App app{"surveyel: composite empirical likelihood estimation for informative survey samples"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out;
    int reps = 0;
    int jobs = 0;
    std::vector<std::pair<surveyel::Command, CLI::App*>> subs;
    const std::pair<const char*, const char*> commands[] = {
        {"fit", "fit CE, CS and PL estimators to a dataset"},
        {"simulate", "draw a population and a sample from a simulation design"},
        {"mc", "Monte Carlo validation of the estimators"},
        {"decluster", "keep one member per family and rescale its weight"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON config document")->required();
        sub->add_option("--seed", seed, "RNG seed (overrides the config)");
        sub->add_option("--out", out, "output directory (overrides the config)");
        if (std::string(name) == "mc") {
            sub->add_option("--reps", reps, "Monte Carlo replicates")->check(CLI::PositiveNumber);
            sub->add_option("--jobs", jobs, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
        }
        subs.emplace_back(surveyel::parse_command(name), sub);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : surveyel::kExitInput;
    }
    for (const auto& [command, sub] : subs) {
        if (!sub->parsed()) continue;
        surveyel::Overrides ov;
        if (sub->count("--seed")) ov.seed = seed;
        if (sub->count("--out")) ov.out = out;
        if (sub->get_option_no_throw("--reps") && sub->count("--reps")) ov.reps = reps;
        if (sub->get_option_no_throw("--jobs") && sub->count("--jobs")) ov.jobs = jobs;
        try {
            surveyel::RunConfig cfg = surveyel::parse_config(config_path);
            return surveyel::run_command(command, std::move(cfg), ov, std::cerr);
        } catch (const surveyel::Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return surveyel::kExitInput;
        }
    }
    return surveyel::kExitInput;
}
