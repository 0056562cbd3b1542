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

#include "surveyel/simulate.hpp"

#include <cmath>
#include <random>

#include "surveyel/error.hpp"
#include "surveyel/log.hpp"
#include "sim_internal.hpp"

namespace surveyel {
namespace {

constexpr const char* kModule = "simulate";
constexpr Eigen::Index kMaxGridPoints = 4000000;

Schema population_schema(const DesignSpec& spec, const std::vector<std::string>& names) {
    Schema s;
    s.response = spec.outcome.name;
    for (const auto& n : names) {
        if (n != spec.outcome.name && n != kPiColumn && n != kLatentColumn) s.covariates.push_back(n);
    }
    s.design = spec.design_columns;
    s.weight_source = kPiColumn;
    s.weight_mode = WeightMode::kInverseProbability;
    return s;
}

Dataset to_dataset(detail::Columns cols, Schema schema) {
    Table t;
    t.names = std::move(cols.names);
    t.columns = std::move(cols.cols);
    return Dataset::from_table(std::move(t), std::move(schema));
}

}  // namespace

VectorXd inclusion_probability(const DesignSpec& spec, const Dataset& rows) {
    detail::Columns cols;
    for (const auto& n : rows.names()) cols.set(n, rows.column(n));
    VectorXd latent = rows.has_column(kLatentColumn) ? rows.column(kLatentColumn) : VectorXd();
    VectorXd pi;
    if (spec.design == DesignKind::kPoisson) {
        if (spec.poisson.latent_coef != 0 && latent.size() == 0) {
            throw InputError(kModule, "inclusion_probability", "latent column is required");
        }
        pi = detail::poisson_pi(spec.poisson, detail::eval_linear(spec.poisson.logit, cols), latent);
    } else {
        const VectorXd& s = cols.get(spec.strata.stratum);
        pi.resize(s.size());
        const bool has_mult = spec.strata.multiplier_upper > spec.strata.multiplier_lower;
        if (has_mult && latent.size() == 0) {
            throw InputError(kModule, "inclusion_probability", "latent column is required");
        }
        for (Index i = 0; i < s.size(); ++i) {
            const double rate = s(i) == 1.0 ? spec.strata.rate_one : spec.strata.rate_zero;
            pi(i) = rate * (has_mult ? latent(i) : spec.strata.multiplier_lower);
        }
    }
    return pi;
}

Dataset gen_population(const DesignSpec& spec, std::uint64_t seed) {
    validate_design(spec);
    const Index N = spec.population_size;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    detail::Columns cols;
    cols.rows_hint = N;
    for (const auto& c : spec.covariates) {
        VectorXd v(N);
        switch (c.kind) {
            case CovariateKind::kNormal:
                for (Index i = 0; i < N; ++i) v(i) = c.mean + c.sd * normal(rng);
                break;
            case CovariateKind::kBernoulli: {
                const VectorXd eta = detail::eval_linear(c.logit, cols);
                for (Index i = 0; i < N; ++i) v(i) = unif(rng) < expit(eta(i)) ? 1.0 : 0.0;
                break;
            }
            case CovariateKind::kCategorical: {
                std::discrete_distribution<std::size_t> pick(c.probs.begin(), c.probs.end());
                for (Index i = 0; i < N; ++i) v(i) = c.values[pick(rng)];
                break;
            }
            case CovariateKind::kUniform:
                for (Index i = 0; i < N; ++i) v(i) = c.lower + (c.upper - c.lower) * unif(rng);
                break;
        }
        cols.set(c.name, std::move(v));
    }
    for (const auto& d : spec.derived) detail::apply_derived(d, cols);

    const VectorXd eta = detail::eval_linear(spec.outcome.predictor, cols);
    VectorXd y(N);
    switch (spec.outcome.family) {
        case Family::kBernoulliLogit:
            for (Index i = 0; i < N; ++i) y(i) = unif(rng) < expit(eta(i)) ? 1.0 : 0.0;
            break;
        case Family::kGaussianIdentity:
            for (Index i = 0; i < N; ++i) y(i) = eta(i) + spec.outcome.sd * normal(rng);
            break;
        case Family::kGammaInverse:
            for (Index i = 0; i < N; ++i) {
                if (!(eta(i) > 0)) {
                    throw InputError(kModule, "gen_population", "gamma outcome needs a positive linear predictor");
                }
                std::gamma_distribution<double> g(spec.outcome.shape, 1.0 / eta(i) / spec.outcome.shape);
                y(i) = g(rng);
            }
            break;
    }
    cols.set(spec.outcome.name, std::move(y));
    for (const auto& d : spec.outcome_derived) detail::apply_derived(d, cols);

    VectorXd latent(N);
    if (spec.design == DesignKind::kPoisson) {
        for (Index i = 0; i < N; ++i) latent(i) = normal(rng);
    } else {
        const double lo = spec.strata.multiplier_lower, hi = spec.strata.multiplier_upper;
        for (Index i = 0; i < N; ++i) latent(i) = lo + (hi - lo) * unif(rng);
    }
    cols.set(kLatentColumn, latent);
    Dataset tmp = to_dataset(cols, Schema{});
    VectorXd pi = inclusion_probability(spec, tmp);
    for (Index i = 0; i < N; ++i) {
        if (!(pi(i) > 0 && pi(i) <= 1)) {
            throw InputError(kModule, "gen_population", "inclusion probability outside (0, 1]");
        }
    }
    cols.set(kPiColumn, pi);
    const auto names = cols.names;
    return to_dataset(std::move(cols), population_schema(spec, names));
}

Dataset draw_sample(const Dataset& population, const DesignSpec& spec, std::uint64_t seed) {
    const VectorXd& pi = population.column(kPiColumn);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Index> rows;
    for (int attempt = 0; attempt < 10 && rows.empty(); ++attempt) {
        if (attempt > 0) log::warn("simulate/draw_sample: empty sample, redrawing");
        for (Index i = 0; i < pi.size(); ++i) {
            if (unif(rng) < pi(i)) rows.push_back(i);
        }
    }
    if (rows.empty()) {
        throw InputError(kModule, "draw_sample", "empty sample after 10 attempts");
    }
    Table t;
    for (const auto& name : population.names()) {
        if (spec.mask_latent && (name == kLatentColumn || name == kPiColumn)) continue;
        const VectorXd& c = population.column(name);
        VectorXd s(static_cast<Index>(rows.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) s(static_cast<Index>(k)) = c(rows[k]);
        t.names.push_back(name);
        t.columns.push_back(std::move(s));
    }
    Schema schema = population.schema();
    schema.pi.clear();
    if (spec.mask_latent) {
        VectorXd w(static_cast<Index>(rows.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) w(static_cast<Index>(k)) = 1.0 / pi(rows[k]);
        t.names.emplace_back(kWeightColumn);
        t.columns.push_back(std::move(w));
        schema.weight_source = kWeightColumn;
        schema.weight_mode = WeightMode::kDirect;
    }
    return Dataset::from_table(std::move(t), std::move(schema));
}

Dataset ExpectationGrid::as_dataset() const {
    Table t;
    t.names = names;
    t.names.emplace_back("prob");
    t.columns.assign(t.names.size(), VectorXd(static_cast<Index>(points.size())));
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = 0; j < names.size(); ++j) {
            t.columns[j](static_cast<Index>(i)) = points[i].values[j];
        }
        t.columns.back()(static_cast<Index>(i)) = points[i].prob;
    }
    return Dataset::from_table(std::move(t), Schema{});
}

namespace {

// Expand the grid by one generator: each row gets `nodes` children with
// conditional probabilities cond(row, node).
template <typename Cond>
void expand(detail::Columns& cols, VectorXd& prob, const std::string& name, const VectorXd& nodes, Cond cond) {
    const Index rows = prob.size();
    const Index k = nodes.size();
    if (rows * k > kMaxGridPoints) {
        throw InputError(kModule, "superpopulation_grid",
                         "exact expectation grid too large; use the reference truth mode");
    }
    VectorXd newprob(rows * k);
    VectorXd vals(rows * k);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < k; ++j) {
            newprob(i * k + j) = prob(i) * cond(i, j);
            vals(i * k + j) = nodes(j);
        }
    }
    cols.repeat_rows(k);
    cols.rows_hint = rows * k;
    cols.set(name, std::move(vals));
    prob = std::move(newprob);
}

// Drop zero-probability rows to keep the grid compact.
void prune(detail::Columns& cols, VectorXd& prob) {
    std::vector<Index> keep;
    for (Index i = 0; i < prob.size(); ++i) {
        if (prob(i) > 0) keep.push_back(i);
    }
    if (static_cast<Index>(keep.size()) == prob.size()) return;
    for (auto& c : cols.cols) {
        VectorXd r(static_cast<Index>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k) r(static_cast<Index>(k)) = c(keep[k]);
        c = std::move(r);
    }
    VectorXd p(static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) p(static_cast<Index>(k)) = prob(keep[k]);
    prob = std::move(p);
    cols.rows_hint = prob.size();
}

detail::Columns build_grid(const DesignSpec& spec, bool with_outcome, VectorXd& prob) {
    validate_design(spec);
    detail::Columns cols;
    cols.rows_hint = 1;
    prob = VectorXd::Ones(1);
    const int Q = spec.quadrature_nodes;
    for (const auto& c : spec.covariates) {
        switch (c.kind) {
            case CovariateKind::kNormal: {
                auto [x, w] = detail::gauss_hermite(Q);
                VectorXd nodes = (c.mean + c.sd * x.array()).matrix();
                expand(cols, prob, c.name, nodes, [&](Index, Index j) { return w(j); });
                break;
            }
            case CovariateKind::kUniform: {
                auto [x, w] = detail::gauss_legendre(Q, c.lower, c.upper);
                expand(cols, prob, c.name, x, [&](Index, Index j) { return w(j); });
                break;
            }
            case CovariateKind::kCategorical: {
                VectorXd nodes = Eigen::Map<const VectorXd>(c.values.data(), static_cast<Index>(c.values.size()));
                VectorXd p = Eigen::Map<const VectorXd>(c.probs.data(), static_cast<Index>(c.probs.size()));
                p /= p.sum();
                expand(cols, prob, c.name, nodes, [&](Index, Index j) { return p(j); });
                break;
            }
            case CovariateKind::kBernoulli: {
                const VectorXd eta = detail::eval_linear(c.logit, cols);
                VectorXd nodes(2);
                nodes << 0.0, 1.0;
                expand(cols, prob, c.name, nodes, [&](Index i, Index j) {
                    const double p1 = expit(eta(i));
                    return j == 1 ? p1 : 1.0 - p1;
                });
                break;
            }
        }
        prune(cols, prob);
    }
    for (const auto& d : spec.derived) detail::apply_derived(d, cols);
    if (with_outcome) {
        const VectorXd eta = detail::eval_linear(spec.outcome.predictor, cols);
        switch (spec.outcome.family) {
            case Family::kBernoulliLogit: {
                VectorXd nodes(2);
                nodes << 0.0, 1.0;
                expand(cols, prob, spec.outcome.name, nodes, [&](Index i, Index j) {
                    const double p1 = expit(eta(i));
                    return j == 1 ? p1 : 1.0 - p1;
                });
                break;
            }
            case Family::kGaussianIdentity: {
                // y = eta + sd * e; store e first, then shift by the row's eta.
                auto [x, w] = detail::gauss_hermite(Q);
                const Index rows = prob.size();
                expand(cols, prob, spec.outcome.name, x, [&](Index, Index j) { return w(j); });
                VectorXd y = cols.get(spec.outcome.name);
                for (Index i = 0; i < rows; ++i) {
                    for (Index j = 0; j < x.size(); ++j) {
                        y(i * x.size() + j) = eta(i) + spec.outcome.sd * x(j);
                    }
                }
                cols.set(spec.outcome.name, std::move(y));
                break;
            }
            case Family::kGammaInverse:
                throw InputError(kModule, "superpopulation_grid",
                                 "exact expectations are not available for a gamma outcome; use the reference truth mode");
        }
        prune(cols, prob);
        for (const auto& d : spec.outcome_derived) detail::apply_derived(d, cols);
    }
    return cols;
}

}  // namespace

ExpectationGrid superpopulation_grid(const DesignSpec& spec, bool with_outcome) {
    VectorXd prob;
    detail::Columns cols = build_grid(spec, with_outcome, prob);
    ExpectationGrid g;
    g.names = cols.names;
    g.points.resize(static_cast<std::size_t>(prob.size()));
    for (Index i = 0; i < prob.size(); ++i) {
        auto& pt = g.points[static_cast<std::size_t>(i)];
        pt.prob = prob(i);
        pt.values.resize(cols.names.size());
        for (std::size_t j = 0; j < cols.names.size(); ++j) pt.values[j] = cols.cols[j](i);
    }
    return g;
}

ConstraintSpec resolve_constraint_truth(const DesignSpec& spec, const Dataset* population, std::uint64_t seed) {
    const char* op = "resolve_constraint_truth";
    ConstraintSpec out = spec.constraints;
    if (spec.truth == TruthMode::kSupplied || out.entries.empty()) return out;

    auto fill = [&](auto getcol, const VectorXd& prob) {
        for (auto& e : out.entries) {
            const VectorXd& t = getcol(e.target_column);
            if (e.kind == ConstraintKind::kGeneralMoment) {
                e.gamma = prob.dot(t) / prob.sum();
            } else {
                const VectorXd& g = getcol(e.group_column);
                const VectorXd ind = (g.array() == e.group_value).cast<double>();
                const double mass = prob.dot(ind);
                if (!(mass > 0)) {
                    throw InputError(kModule, op, "subgroup " + constraint_label(e) + " has zero probability");
                }
                e.gamma = prob.dot(ind.cwiseProduct(t)) / mass;
            }
        }
    };
    switch (spec.truth) {
        case TruthMode::kExact: {
            VectorXd prob;
            detail::Columns cols = build_grid(spec, true, prob);
            fill([&](const std::string& n) -> const VectorXd& { return cols.get(n); }, prob);
            break;
        }
        case TruthMode::kReference: {
            DesignSpec big = spec;
            big.population_size = spec.reference_size;
            Dataset ref = gen_population(big, seed ^ 0x9e3779b97f4a7c15ULL);
            fill([&](const std::string& n) -> const VectorXd& { return ref.column(n); },
                 VectorXd::Ones(ref.n()));
            break;
        }
        case TruthMode::kPopulation: {
            if (population == nullptr) {
                throw InputError(kModule, op, "population truth mode needs the population");
            }
            fill([&](const std::string& n) -> const VectorXd& { return population->column(n); },
                 VectorXd::Ones(population->n()));
            break;
        }
        case TruthMode::kSupplied: break;
    }
    return out;
}

VectorXd superpopulation_theta(const DesignSpec& spec, const ModelSpec& model) {
    VectorXd prob;
    detail::Columns cols = build_grid(spec, true, prob);
    Table t{cols.names, cols.cols};
    Schema s;
    s.response = spec.outcome.name;
    Dataset grid = Dataset::from_table(std::move(t), s);
    const MatrixXd X = design_matrix(model, grid);
    const VectorXd w = prob / prob.sum();
    IrlsResult start = irls_fit(model.family, grid.y(), X, w);
    NewtonOptions opt;
    opt.starts = 1;
    return newton_solve_score(model.family, X, grid.y(), w, start.coef, opt).theta;
}

VectorXd conditional_visibility_truth(const DesignSpec& spec, const Dataset& sample) {
    detail::Columns cols;
    for (const auto& n : sample.names()) cols.set(n, sample.column(n));
    const Index n = sample.n();
    VectorXd bp(n);
    if (spec.design == DesignKind::kPoisson) {
        const VectorXd eta = detail::eval_linear(spec.poisson.logit, cols);
        if (spec.poisson.latent_coef == 0.0) {
            return detail::poisson_pi(spec.poisson, eta, VectorXd());
        }
        auto [z, w] = detail::gauss_hermite(std::max(spec.quadrature_nodes, 64));
        for (Index i = 0; i < n; ++i) {
            double acc = 0.0;
            for (Index j = 0; j < z.size(); ++j) {
                acc += w(j) * (spec.poisson.floor + (spec.poisson.ceiling - spec.poisson.floor) *
                                                        expit(eta(i) + spec.poisson.latent_coef * z(j)));
            }
            bp(i) = acc;
        }
        return bp;
    }
    const VectorXd& s = cols.get(spec.strata.stratum);
    const double mean_mult = 0.5 * (spec.strata.multiplier_lower + spec.strata.multiplier_upper);
    for (Index i = 0; i < n; ++i) {
        bp(i) = (s(i) == 1.0 ? spec.strata.rate_one : spec.strata.rate_zero) * mean_mult;
    }
    return bp;
}

}  // namespace surveyel
