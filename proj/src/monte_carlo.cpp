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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include "surveyel/error.hpp"
#include "surveyel/log.hpp"
#include "surveyel/simulate.hpp"
#include "surveyel/variance.hpp"
#include "format.hpp"

namespace surveyel {

VisibilitySource parse_visibility_source(const std::string& s) {
    if (s == "given-pi") return VisibilitySource::kGivenPi;
    if (s == "gamma-regression") return VisibilitySource::kGammaRegression;
    if (s == "truth") return VisibilitySource::kTruth;
    throw InputError("simulate", "monte_carlo", "unknown visibility source '" + s + "'");
}

std::string to_string(VisibilitySource v) {
    switch (v) {
        case VisibilitySource::kGivenPi: return "given-pi";
        case VisibilitySource::kGammaRegression: return "gamma-regression";
        case VisibilitySource::kTruth: return "truth";
    }
    return "?";
}

const EstimatorSummary& MCSummary::summary(Estimator e) const {
    for (const auto& s : estimators) {
        if (s.estimator == e) return s;
    }
    throw InputError("simulate", "summary", "estimator " + to_string(e) + " was not run");
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Two independent 64-bit seeds for replicate r.
std::pair<std::uint64_t, std::uint64_t> replicate_seeds(std::uint64_t seed, int r) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(r), 0x5eedu};
    std::uint32_t out[4];
    seq.generate(out, out + 4);
    auto join = [](std::uint32_t a, std::uint32_t b) { return (static_cast<std::uint64_t>(a) << 32) | b; };
    return {join(out[0], out[1]), join(out[2], out[3])};
}

struct Shared {
    const MonteCarloSpec* spec = nullptr;
    ConstraintSpec constraints;  // resolved once unless the truth is per-population
    std::optional<Dataset> population;
    std::uint64_t seed = 0;
};

ReplicateRecord run_replicate(const Shared& sh, int r) {
    const MonteCarloSpec& spec = *sh.spec;
    ReplicateRecord rec;
    rec.index = r;
    rec.estimates.resize(spec.estimators.size());
    const auto [pop_seed, sample_seed] = replicate_seeds(sh.seed, r);
    try {
        Dataset pop = sh.population ? *sh.population : gen_population(spec.design, pop_seed);
        Dataset sample = draw_sample(pop, spec.design, sample_seed);
        rec.sample_size = sample.n();
        ConstraintSpec cs = spec.design.truth == TruthMode::kPopulation
                                ? resolve_constraint_truth(spec.design, &pop)
                                : sh.constraints;
        const ConstraintMatrix cm = build_constraint_matrix(sample, cs);

        std::optional<VisibilityModel> vis;
        auto need_vis = [&]() -> const VisibilityModel& {
            if (!vis) {
                switch (spec.visibility) {
                    case VisibilitySource::kGivenPi: vis = visibility_from_pi(sample); break;
                    case VisibilitySource::kTruth:
                        vis = visibility_from_values(conditional_visibility_truth(spec.design, sample));
                        break;
                    case VisibilitySource::kGammaRegression: {
                        VisibilityOptions vo;
                        vo.formula = spec.visibility_formula;
                        vo.use_default_formula = spec.visibility_formula.empty();
                        vis = estimate_visibility(sample, vo);
                        break;
                    }
                }
            }
            return *vis;
        };

        std::optional<EstimateResult> ce, cs_fit;
        for (std::size_t k = 0; k < spec.estimators.size(); ++k) {
            ReplicateEstimate& est = rec.estimates[k];
            try {
                EstimateResult fit;
                switch (spec.estimators[k]) {
                    case Estimator::kPL: fit = fit_pl(sample, spec.model, spec.fit); break;
                    case Estimator::kCS: fit = fit_cs(sample, spec.model, cm, spec.fit); break;
                    case Estimator::kCE: fit = fit_ce(sample, spec.model, cm, need_vis(), spec.fit); break;
                }
                est.theta = fit.theta;
                est.se = fit.se;
                est.ok = fit.converged && fit.se.size() == fit.theta.size() && fit.se.allFinite();
                if (!est.ok) {
                    est.failure = fit.diagnostics.failure.empty() ? "covariance unavailable" : fit.diagnostics.failure;
                }
                if (est.ok && spec.estimators[k] == Estimator::kCE) ce = std::move(fit);
                else if (est.ok && spec.estimators[k] == Estimator::kCS) cs_fit = std::move(fit);
            } catch (const Error& e) {
                est.ok = false;
                est.failure = e.what();
            }
        }
        if (ce && cs_fit) {
            rec.has_gap = true;
            rec.gap_min_eigenvalue = efficiency_gap(cs_fit->covariance, ce->covariance).min_eigenvalue;
            rec.ce_trace_per_coef = ce->covariance.trace() / static_cast<double>(ce->covariance.rows());
        }
    } catch (const Error& e) {
        rec.failure = e.what();
        for (auto& est : rec.estimates) {
            est.ok = false;
            est.failure = rec.failure;
        }
    }
    return rec;
}

double median(std::vector<double> v) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

EstimatorSummary summarize(Estimator e, std::size_t k, const std::vector<ReplicateRecord>& recs,
                           const VectorXd& theta0) {
    const Index p = theta0.size();
    EstimatorSummary s;
    s.estimator = e;
    s.mean = s.bias = s.sd = s.rmse = s.mean_se = s.median_se = s.coverage = VectorXd::Constant(p, kNaN);
    std::vector<const ReplicateEstimate*> ok;
    for (const auto& r : recs) {
        const ReplicateEstimate& est = r.estimates[k];
        if (est.ok) ok.push_back(&est);
        else ++s.failures;
    }
    s.successes = static_cast<int>(ok.size());
    if (ok.empty()) return s;
    const double m = static_cast<double>(ok.size());
    for (Index j = 0; j < p; ++j) {
        double sum = 0, sse = 0, se_sum = 0, hits = 0;
        std::vector<double> ses;
        for (const auto* est : ok) {
            const double t = est->theta(j);
            sum += t;
            sse += (t - theta0(j)) * (t - theta0(j));
            se_sum += est->se(j);
            ses.push_back(est->se(j));
            if (std::abs(t - theta0(j)) <= kNormalQuantile975 * est->se(j)) hits += 1;
        }
        const double mean = sum / m;
        double var = 0;
        for (const auto* est : ok) var += (est->theta(j) - mean) * (est->theta(j) - mean);
        s.mean(j) = mean;
        s.bias(j) = mean - theta0(j);
        s.sd(j) = ok.size() > 1 ? std::sqrt(var / (m - 1)) : 0.0;
        s.rmse(j) = std::sqrt(sse / m);
        s.mean_se(j) = se_sum / m;
        s.median_se(j) = median(std::move(ses));
        s.coverage(j) = hits / m;
    }
    return s;
}

}  // namespace

MCSummary run_monte_carlo(const MonteCarloSpec& spec, int reps, std::uint64_t seed, int jobs) {
    const char* op = "run_monte_carlo";
    if (reps < 1) throw InputError("simulate", op, "reps must be at least 1");
    if (spec.estimators.empty()) throw InputError("simulate", op, "no estimators requested");
    validate_design(spec.design);
    if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    jobs = std::min(jobs, reps);

    MCSummary out;
    out.reps = reps;
    out.seed = seed;
    out.jobs = jobs;
    out.coefficient_names = spec.model.coefficient_names();
    out.theta_true = spec.theta_true ? *spec.theta_true : superpopulation_theta(spec.design, spec.model);
    if (out.theta_true.size() != spec.model.p()) {
        throw InputError("simulate", op, "theta_true has the wrong dimension");
    }

    Shared sh;
    sh.spec = &spec;
    sh.seed = seed;
    if (spec.fixed_population) {
        sh.population = gen_population(spec.design, replicate_seeds(seed, -1).first);
    }
    if (spec.design.truth != TruthMode::kPopulation) {
        sh.constraints = resolve_constraint_truth(spec.design, nullptr, seed);
    } else if (sh.population) {
        sh.constraints = resolve_constraint_truth(spec.design, &*sh.population);
    }

    out.replicates.resize(static_cast<std::size_t>(reps));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int r = next++; r < reps; r = next++) {
            out.replicates[static_cast<std::size_t>(r)] = run_replicate(sh, r);
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    double size_sum = 0, gap_sum = 0, tr_sum = 0;
    for (const auto& r : out.replicates) {
        size_sum += static_cast<double>(r.sample_size);
        if (!r.failure.empty()) log::debug("simulate/run_monte_carlo: replicate " + std::to_string(r.index) + ": " + r.failure);
        if (r.has_gap) {
            ++out.gap_count;
            gap_sum += r.gap_min_eigenvalue;
            tr_sum += r.ce_trace_per_coef;
        }
    }
    out.mean_sample_size = size_sum / reps;
    out.mean_gap_min_eigenvalue = out.gap_count ? gap_sum / out.gap_count : kNaN;
    out.mean_ce_trace_per_coef = out.gap_count ? tr_sum / out.gap_count : kNaN;
    for (std::size_t k = 0; k < spec.estimators.size(); ++k) {
        out.estimators.push_back(summarize(spec.estimators[k], k, out.replicates, out.theta_true));
        if (out.estimators.back().failures > 0) {
            log::info("simulate/run_monte_carlo: " + to_string(spec.estimators[k]) + " failed in " +
                      std::to_string(out.estimators.back().failures) + " of " + std::to_string(reps) + " replicates");
        }
    }
    return out;
}

void write_mc_csv(const std::string& path, const MCSummary& s) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("simulate", "write_mc_csv", "cannot open '" + path + "' for writing");
    f << "estimator,coefficient,theta_true,mean,bias,sd,rmse,mean_se,median_se,coverage,successes,failures,reps\n";
    for (const auto& e : s.estimators) {
        for (std::size_t j = 0; j < s.coefficient_names.size(); ++j) {
            const Index i = static_cast<Index>(j);
            f << to_string(e.estimator) << ',' << s.coefficient_names[j] << ',' << fmt17(s.theta_true(i)) << ','
              << fmt17(e.mean(i)) << ',' << fmt17(e.bias(i)) << ',' << fmt17(e.sd(i)) << ',' << fmt17(e.rmse(i))
              << ',' << fmt17(e.mean_se(i)) << ',' << fmt17(e.median_se(i)) << ',' << fmt17(e.coverage(i)) << ','
              << e.successes << ',' << e.failures << ',' << s.reps << '\n';
        }
    }
    if (!f) throw InputError("simulate", "write_mc_csv", "write failed for '" + path + "'");
}

}  // namespace surveyel
