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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "surveyel/constraints.hpp"
#include "surveyel/dataset.hpp"
#include "surveyel/estimators.hpp"
#include "surveyel/glm.hpp"

namespace surveyel {

// A linear predictor over named columns: intercept + sum coef_j * column_j.
struct LinearTerm {
    double intercept = 0.0;
    std::vector<std::pair<std::string, double>> coefs;
};

enum class CovariateKind { kNormal, kBernoulli, kCategorical, kUniform };

struct CovariateSpec {
    std::string name;
    CovariateKind kind = CovariateKind::kNormal;
    double mean = 0.0, sd = 1.0;                 // normal
    LinearTerm logit;                            // bernoulli: P(1) = expit(logit over earlier columns)
    std::vector<double> values, probs;           // categorical
    double lower = 0.0, upper = 1.0;             // uniform
};

enum class DerivedKind { kIndicator, kProduct, kSquare, kDummies };

// indicator: 1{a == value}; product: a*b; square: a*a;
// dummies: one indicator column "<prefix><v>" per listed value of a.
struct DerivedSpec {
    std::string name;
    DerivedKind kind = DerivedKind::kProduct;
    std::string a, b;
    double value = 0.0;
    std::vector<double> values;
    std::string prefix;
};

// Generating model for the outcome; may include terms the analysis model omits.
struct OutcomeSpec {
    std::string name = "y";
    Family family = Family::kBernoulliLogit;
    LinearTerm predictor;
    double sd = 1.0;     // gaussian noise
    double shape = 5.0;  // gamma shape
};

enum class DesignKind { kPoisson, kTwoStrata };

struct PoissonDesignSpec {
    // pi = floor + (ceiling - floor) * expit(logit + latent_coef * z), z ~ N(0, 1) latent.
    LinearTerm logit;
    double floor = 0.0;
    double ceiling = 1.0;
    double latent_coef = 0.0;
};

struct TwoStrataDesignSpec {
    // Stratum column must take values 0/1. pi = rate_s * u, u ~ U(lower, upper) latent.
    std::string stratum;
    double rate_one = 0.5;   // stratum == 1
    double rate_zero = 0.05; // stratum == 0
    double multiplier_lower = 1.0;
    double multiplier_upper = 1.0;
};

enum class TruthMode { kExact, kReference, kPopulation, kSupplied };

TruthMode parse_truth_mode(const std::string& s);
std::string to_string(TruthMode m);

struct DesignSpec {
    Index population_size = 1000;
    std::vector<CovariateSpec> covariates;
    std::vector<DerivedSpec> derived;
    OutcomeSpec outcome;
    std::vector<DerivedSpec> outcome_derived;  // computed after the outcome, may reference it
    DesignKind design = DesignKind::kPoisson;
    PoissonDesignSpec poisson;
    TwoStrataDesignSpec strata;
    std::vector<std::string> design_columns;  // observed design variables (Z)
    bool mask_latent = false;
    ConstraintSpec constraints;
    TruthMode truth = TruthMode::kExact;
    Index reference_size = 1000000;
    int quadrature_nodes = 48;
};

inline constexpr const char* kLatentColumn = "latent";
inline constexpr const char* kPiColumn = "pi";
inline constexpr const char* kWeightColumn = "weight";

void validate_design(const DesignSpec& spec);

// Population with every column, the true "pi" and the "latent" column.
Dataset gen_population(const DesignSpec& spec, std::uint64_t seed);

// Poisson or stratified Bernoulli inclusions. With mask_latent the latent column
// and pi are dropped and the inverse probability is carried as "weight".
Dataset draw_sample(const Dataset& population, const DesignSpec& spec, std::uint64_t seed);

// Exact superpopulation expectations by enumeration of discrete generators and
// Gauss quadrature over continuous ones.
struct GridPoint {
    std::vector<double> values;  // aligned with grid column names
    double prob = 0.0;
};
struct ExpectationGrid {
    std::vector<std::string> names;
    std::vector<GridPoint> points;
    Dataset as_dataset() const;  // columns plus "prob"
};
ExpectationGrid superpopulation_grid(const DesignSpec& spec, bool with_outcome = true);

// Constraint spec with gamma filled according to spec.truth. kPopulation needs the population.
ConstraintSpec resolve_constraint_truth(const DesignSpec& spec, const Dataset* population = nullptr,
                                        std::uint64_t seed = 0);

// Root of the superpopulation expected score for the analysis model.
VectorXd superpopulation_theta(const DesignSpec& spec, const ModelSpec& model);

// E_P[pi | observed columns] for each row of a sample, integrating the latent variable.
VectorXd conditional_visibility_truth(const DesignSpec& spec, const Dataset& sample);

// pi for the rows of a table carrying the latent column.
VectorXd inclusion_probability(const DesignSpec& spec, const Dataset& rows);

// ---- Monte Carlo ----

enum class VisibilitySource { kGivenPi, kGammaRegression, kTruth };
VisibilitySource parse_visibility_source(const std::string& s);
std::string to_string(VisibilitySource v);

struct MonteCarloSpec {
    DesignSpec design;
    ModelSpec model;
    std::optional<VectorXd> theta_true;  // default: superpopulation_theta
    std::vector<Estimator> estimators{Estimator::kCE, Estimator::kCS, Estimator::kPL};
    VisibilitySource visibility = VisibilitySource::kGivenPi;
    std::vector<std::string> visibility_formula;  // gamma regression; empty = schema default
    bool fixed_population = false;
    FitOptions fit;
};

struct ReplicateEstimate {
    bool ok = false;
    VectorXd theta;
    VectorXd se;
    std::string failure;
};

struct ReplicateRecord {
    int index = 0;
    Index sample_size = 0;
    std::vector<ReplicateEstimate> estimates;  // aligned with MonteCarloSpec::estimators
    bool has_gap = false;
    double gap_min_eigenvalue = 0.0;  // of Cov_CS - Cov_CE
    double ce_trace_per_coef = 0.0;   // trace(Cov_CE) / p
    std::string failure;              // replicate-level failure
};

struct EstimatorSummary {
    Estimator estimator = Estimator::kCE;
    VectorXd mean, bias, sd, rmse, mean_se, median_se, coverage;
    int successes = 0;
    int failures = 0;
};

struct MCSummary {
    int reps = 0;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::vector<std::string> coefficient_names;
    VectorXd theta_true;
    std::vector<EstimatorSummary> estimators;
    std::vector<ReplicateRecord> replicates;
    double mean_sample_size = 0.0;
    int gap_count = 0;
    double mean_gap_min_eigenvalue = 0.0;
    double mean_ce_trace_per_coef = 0.0;

    const EstimatorSummary& summary(Estimator e) const;
};

inline constexpr double kNormalQuantile975 = 1.959963984540054;

// Replicate r uses streams derived from (seed, r), so results do not depend on jobs.
MCSummary run_monte_carlo(const MonteCarloSpec& spec, int reps, std::uint64_t seed, int jobs = 1);

// One row per estimator x coefficient.
void write_mc_csv(const std::string& path, const MCSummary& summary);

}  // namespace surveyel
