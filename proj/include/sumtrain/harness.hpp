/*
 * Copyright 2026 The sumtrain Authors
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
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sumtrain/model_gen.hpp"
#include "sumtrain/summary.hpp"

namespace sumtrain
{

enum class ResamplerMode
{
    oracle,    // rank-one v v'
    expected,  // n (sigma_y^2 Sigma + Sigma beta beta' Sigma)
    plugin,    // |y|^2 W'W / n_w, sampled through the panel factor
};

struct ResamplerConfig
{
    ResamplerMode mode = ResamplerMode::expected;
    ResampleNoise noise = ResampleNoise::gaussian;

    bool operator==(const ResamplerConfig&) const = default;
};

struct EstimatorConfig
{
    bool ridge = true;
    bool threshold = false;
    std::vector<double> theta_grid;      // empty: 25 log-spaced points in [1e-3, 1e2]
    std::vector<Eigen::Index> k_grid;    // empty: default_k_grid(p)

    bool operator==(const EstimatorConfig&) const = default;
};

struct EvaluatorModes
{
    bool pseudo = true;
    bool individual = true;
    bool theory = true;
    bool holdout = false;

    bool operator==(const EvaluatorModes&) const = default;
};

struct ExperimentConfig
{
    GenConfig gen;
    EstimatorConfig estimator;
    ResamplerConfig resampler;
    EvaluatorModes modes;
    double split_ratio = 0.8;
    int replicates = 50;
    Eigen::Index n_test = 1000;  // hold-out rows when modes.holdout
    std::uint64_t seed = 1;

    bool operator==(const ExperimentConfig&) const = default;
};

std::vector<std::string> validate(const ExperimentConfig& cfg);

/// About 25 log-spaced distinct integers in [1, p].
std::vector<Eigen::Index> default_k_grid(Eigen::Index p);

struct MeanSE
{
    double mean = 0.0;
    double se = 0.0;
    int count = 0;       // finite values used
    int degenerate = 0;  // NaN values skipped
};

/// Pairwise-summed mean and standard error over the finite entries.
MeanSE mean_se(const std::vector<double>& values);

/// One output row: setting, grid value (or label), evaluator mode, aggregate.
struct ResultRow
{
    std::string setting_id;
    std::string hyperparameter;
    std::string mode;
    double mean = 0.0;
    double se = 0.0;
    int n_replicates = 0;
    std::uint64_t seed = 0;
};

struct CurveSet
{
    std::string family;  // "ridge" or "threshold"
    std::vector<double> grid;
    std::vector<std::vector<double>> pseudo;      // [replicate][grid]
    std::vector<std::vector<double>> individual;  // [replicate][grid]
    std::vector<double> theory;                   // per grid point, NaN if absent
    std::vector<std::size_t> pseudo_best;         // per replicate
    std::vector<std::size_t> individual_best;
    std::vector<double> holdout_pseudo;   // hold-out R^2 of the pseudo-tuned fit
    std::vector<double> holdout_individual;
};

struct SweepResult
{
    std::vector<CurveSet> curves;
    int replicates = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::vector<ResultRow> rows(const std::string& setting_id = "sweep") const;
};

SweepResult run_sweep(const ExperimentConfig& cfg);

struct ParityConfig
{
    ExperimentConfig base;
    std::vector<double> h2_values;
    std::vector<Eigen::Index> p_values;
    std::vector<double> kappa_values;
};

struct ParitySetting
{
    std::string id;
    double h2 = 0.0;
    Eigen::Index p = 0;
    double kappa = 0.0;
    MeanSE holdout_pseudo;
    MeanSE holdout_individual;
    MeanSE difference;  // paired, pseudo minus individual
};

struct ParityResult
{
    std::vector<ParitySetting> settings;
    int replicates = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::vector<ResultRow> rows() const;
};

/// Ridge tuned by both paths, scored on an independent test set.
ParityResult run_parity(const ParityConfig& cfg);

struct RatioConfig
{
    ExperimentConfig base;               // p / n, n_w / n and the AR(1) block size scale with n
    std::vector<Eigen::Index> n_values;
    std::vector<double> thetas;
};

struct RatioPoint
{
    Eigen::Index n = 0;
    double theta = 0.0;
    MeanSE ratio;  // R2_sum / R2_ind per replicate
};

struct RatioResult
{
    std::vector<RatioPoint> points;
    int replicates = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::vector<ResultRow> rows() const;
    /// max over thetas of |mean ratio - 1| at one n.
    [[nodiscard]] double deviation(Eigen::Index n) const;
};

RatioResult run_ratio_convergence(const RatioConfig& cfg);

struct MultiExperimentConfig
{
    MultiAncestryConfig data;
    std::vector<double> thetas;  // ridge theta per population
    double weight_step = 0.05;
    double split_ratio = 0.8;
    int replicates = 50;
    ResamplerConfig resampler;
    std::uint64_t seed = 1;

    bool operator==(const MultiExperimentConfig&) const = default;
};

std::vector<std::string> validate(const MultiExperimentConfig& cfg);

struct MultiResult
{
    std::vector<double> omega_grid;
    std::vector<std::vector<double>> pseudo;  // [replicate][omega]
    std::vector<double> theory;               // theory R^2 per omega
    std::vector<double> argmax;               // per replicate
    double closed_form_omega1 = 1.0;
    int replicates = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::vector<ResultRow> rows() const;
    /// Fraction of replicates whose argmax is within tol of target.
    [[nodiscard]] double fraction_within(double target, double tol) const;
};

/// K = 2 weight study: pseudo R^2 over omega1 against the closed form.
MultiResult run_multi_experiment(const MultiExperimentConfig& cfg);

struct EnsembleStudyConfig
{
    ExperimentConfig base;  // ridge theta grid, top-k grid, n_test
    double weight_step = 0.05;
};

struct EnsembleStudyResult
{
    std::vector<double> holdout_ensemble;
    std::vector<double> holdout_ridge;
    std::vector<double> holdout_threshold;
    int replicates = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::vector<ResultRow> rows() const;
};

/// Ridge + threshold ensemble tuned on one pseudo split, scored on a test set.
EnsembleStudyResult run_ensemble_study(const EnsembleStudyConfig& cfg);

/// Worker count: SUMTRAIN_THREADS when set, else hardware concurrency.
unsigned worker_count(std::size_t tasks);

/// Runs body(i) for i in [0, count); the first failure (lowest index) is
/// rethrown after all workers stop, tagged with the index and its seed.
void parallel_for(std::size_t count, std::uint64_t master_seed, const std::function<void(std::size_t)>& body);

}  // namespace sumtrain
