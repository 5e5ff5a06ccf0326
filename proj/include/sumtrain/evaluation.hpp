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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sumtrain/covariance.hpp"
#include "sumtrain/estimators.hpp"
#include "sumtrain/summary.hpp"

namespace sumtrain
{

struct R2Inputs
{
    const BlockCovariance* sigma = nullptr;  // covariance in the |beta|_Sigma term
    Eigen::Index n_valid = 0;
    double y_norm2_valid = 0.0;
};

void validate(const R2Inputs& inp, Eigen::Index p);

/// <s_valid, b>^2 / (n_v * b' Sigma b * |y_valid|^2), the squared
/// correlation between x'b and y estimated from validation summaries.
/// Empty when b' Sigma b = 0.
std::optional<double> r2_summary(
    const Eigen::VectorXd& s_valid, const Eigen::VectorXd& beta_hat, const R2Inputs& inp);

std::optional<double> r2_pseudo(
    const PseudoSplit& split, const Eigen::VectorXd& beta_hat, const R2Inputs& inp);

/// Uses X_valid' y_valid in place of s_valid.
std::optional<double> r2_individual(
    const IndividualSplit& split, const Eigen::VectorXd& beta_hat, const R2Inputs& inp);

/// Squared Pearson correlation between X b and y; empty for a constant
/// prediction or constant y.
std::optional<double> r2_holdout(
    const Eigen::MatrixXd& X_test, const Eigen::VectorXd& y_test, const Eigen::VectorXd& beta_hat);

/// n_valid * y_norm2 / n: stand-in for |y_valid|^2 when only summaries exist.
double surrogate_y_norm2(const SummaryStats& stats, Eigen::Index n_valid);

/// Degenerate entries are NaN.
struct TuneResult
{
    std::vector<double> grid;
    std::vector<double> curve;
    std::size_t best_index = 0;
    double best_value = 0.0;
};

/// First index attaining the maximum; values within 1e-12 relative count
/// as ties; NaN ranks below every finite value. Throws when all are NaN.
TuneResult select_best(std::vector<double> grid, std::vector<double> curve);

/// count log-spaced points in [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t count);
std::vector<double> default_theta_grid();

/// A fixed training vector and the matching validation criterion.
struct ValidationContext
{
    Eigen::VectorXd s_train;
    Eigen::VectorXd s_valid;
    R2Inputs inputs;

    static ValidationContext from_pseudo(const PseudoSplit& split, const R2Inputs& inp);
    /// Takes n_valid and |y_valid|^2 from the split itself.
    static ValidationContext from_individual(const IndividualSplit& split, const BlockCovariance& sigma);

    [[nodiscard]] std::optional<double> evaluate(const Eigen::VectorXd& beta_hat) const;
};

TuneResult tune_theta(
    const RidgeSolver& solver, const std::vector<double>& grid, const ValidationContext& ctx);

/// Nested top-k sets ranked on ctx.s_train with the given LD diagonal.
TuneResult tune_threshold(
    const std::vector<Eigen::Index>& ks, const Eigen::VectorXd& g_diag, const ValidationContext& ctx);

/// One tunable family of an ensemble: fit(h) for each grid value h.
struct ComponentFamily
{
    std::string name;
    std::vector<double> grid;
    std::function<Eigen::VectorXd(double)> fit;
};

struct EnsembleTuneResult
{
    std::vector<TuneResult> components;           // per-family tuning
    std::vector<std::vector<double>> weight_grid;  // simplex points
    std::vector<double> curve;                     // R^2 per simplex point
    std::size_t best_index = 0;
    std::vector<double> weights;
    double best_value = 0.0;
    Eigen::VectorXd beta;
};

/// Points of the k-simplex on a lattice of the given step, first
/// coordinate descending (the first point is (1, 0, ..., 0)).
std::vector<std::vector<double>> simplex_grid(std::size_t k, double step);

/// Tunes each family alone on ctx, rescales each tuned fit to unit
/// |.|_Sigma norm, then searches simplex weights over the rescaled fits.
EnsembleTuneResult tune_ensemble(
    const std::vector<ComponentFamily>& families, const ValidationContext& ctx, double step = 0.05);

/// Weight on the target population maximizing
/// (w N1 + (1-w) N2)^2 / (w^2 D1 + (1-w)^2 D2 + 2 w (1-w) D3).
struct TwoPopWeights
{
    double omega1 = 1.0;
    double omega2 = 0.0;
};

TwoPopWeights optimal_two_pop_weights(double N1, double N2, double D1, double D2, double D3);

/// Objective above without the prefactor.
double two_pop_objective(double omega1, double N1, double N2, double D1, double D2, double D3);

}  // namespace sumtrain
