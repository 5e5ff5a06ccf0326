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

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sumtrain/covariance.hpp"
#include "sumtrain/rng.hpp"

namespace sumtrain
{

struct SummaryStats
{
    Eigen::VectorXd s;  // X'y
    Eigen::Index n = 0;
    std::optional<double> y_norm2;
    std::string label;
    std::vector<std::string> ids;  // optional per-coordinate identifiers

    [[nodiscard]] Eigen::Index p() const noexcept { return s.size(); }
};

/// s = X'y, y_norm2 = |y|^2 (left empty when y = 0).
SummaryStats compute_summary(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::string label = {});

struct LDReference
{
    Eigen::MatrixXd G;  // W'W
    Eigen::Index n_w = 0;

    static LDReference from_panel(const Eigen::MatrixXd& W);
    [[nodiscard]] Eigen::Index p() const noexcept { return G.rows(); }
};

/// Throws when G is not square, not finite or asymmetric beyond 1e-8.
void validate(const LDReference& ld);

enum class ResampleNoise
{
    gaussian,
    rademacher,
};

/// Covariance of X'y used to perturb the training half of a pseudo split.
///
/// oracle:   Cov = v v' with v = s - n Sigma beta (rank one).
/// expected: Cov = n (sigma_y^2 Sigma + Sigma beta beta' Sigma), the
///           expectation of the oracle form over y, with
///           sigma_y^2 = beta' Sigma beta + sigma_eps2.
/// plugin:   Cov = c M for a PSD surrogate M; either M itself or a factor
///           F with M = F'F is supplied.
class XtYCovariance
{
public:
    enum class Mode
    {
        oracle,
        expected,
        plugin,
    };

    static XtYCovariance oracle(
        const SummaryStats& stats, const BlockCovariance& sigma, const Eigen::VectorXd& beta);
    static XtYCovariance expected(
        Eigen::Index n,
        const BlockCovariance& sigma,
        const Eigen::VectorXd& beta,
        double sigma_eps2);
    static XtYCovariance plugin(double c, const Eigen::MatrixXd& m);
    static XtYCovariance plugin_factor(double c, Eigen::MatrixXd factor);

    [[nodiscard]] Mode mode() const noexcept { return mode_; }
    [[nodiscard]] Eigen::Index dim() const noexcept { return dim_; }
    /// Rank-one factor (oracle mode only).
    [[nodiscard]] const Eigen::VectorXd& v() const noexcept { return v_; }

    /// One draw of Cov^{1/2} h.
    [[nodiscard]] Eigen::VectorXd sample_root(Rng& rng, ResampleNoise noise) const;

private:
    Mode mode_ = Mode::oracle;
    Eigen::Index dim_ = 0;
    Eigen::VectorXd v_;           // oracle factor, or sqrt(n) Sigma beta
    BlockCovariance sigma_root_;  // expected mode
    double scale_ = 1.0;          // expected: sqrt(n) sigma_y; plugin: sqrt(c)
    Eigen::MatrixXd root_;        // plugin: M^{1/2}
    Eigen::MatrixXd factor_;      // plugin: F
};

struct PseudoSplit
{
    Eigen::VectorXd s_train;
    Eigen::VectorXd s_valid;
    Eigen::Index n_train = 0;
    Eigen::Index n_valid = 0;
};

/// round(ratio * n) with ties to even; throws unless 1 <= result <= n - 1.
Eigen::Index train_size(Eigen::Index n, double ratio);

/// s_train = (n_tr/n) s + sqrt(n_tr n_v / n^2) Cov^{1/2} h, s_valid = s - s_train.
PseudoSplit pseudo_split(
    const SummaryStats& stats,
    const XtYCovariance& cov,
    double ratio,
    Rng& rng,
    ResampleNoise noise = ResampleNoise::gaussian);

struct IndividualSplit
{
    std::vector<bool> mask;  // true = train
    std::vector<Eigen::Index> train_rows;
    std::vector<Eigen::Index> valid_rows;
    Eigen::MatrixXd X_train;
    Eigen::VectorXd y_train;
    Eigen::MatrixXd X_valid;
    Eigen::VectorXd y_valid;
};

/// Each row goes to train with probability ratio; redrawn while either
/// side is empty.
IndividualSplit individual_split(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double ratio, Rng& rng);

}  // namespace sumtrain
