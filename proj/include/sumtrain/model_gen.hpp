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
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sumtrain/covariance.hpp"
#include "sumtrain/rng.hpp"

namespace sumtrain
{

enum class CovarianceKind
{
    identity,
    block_ar1,
    dense,
};

struct CovarianceSpec
{
    CovarianceKind kind = CovarianceKind::identity;
    Eigen::Index p = 1;
    Eigen::Index n_block = 1;  // block_ar1 only
    double rho = 0.0;          // block_ar1 only, in [0, 1)
    Eigen::MatrixXd matrix;    // dense only

    bool operator==(const CovarianceSpec&) const = default;
};

/// Messages for every violated invariant; empty when valid.
std::vector<std::string> validate(const CovarianceSpec& spec);

/// Dense p x p population covariance.
Eigen::MatrixXd build_covariance(const CovarianceSpec& spec);

/// Block representation (one block per AR(1) block, one dense block, or
/// p unit blocks for identity).
BlockCovariance make_covariance(const CovarianceSpec& spec);

/// Symmetric PSD square root R with R * R = M. Eigenvalues down to -1e-10
/// are clipped to zero; asymmetry above 1e-8 (relative) is rejected.
Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m);

/// Blockwise square root of a block covariance.
BlockCovariance matrix_sqrt_psd(const BlockCovariance& m);

enum class EffectDistribution
{
    gaussian,
    rademacher,
};

struct GenConfig
{
    Eigen::Index n = 1;
    Eigen::Index p = 1;
    Eigen::Index n_w = 1;
    double kappa = 1.0;
    double sigma_beta2 = 1.0;
    double target_h2 = 0.5;
    EffectDistribution effect_dist = EffectDistribution::gaussian;
    CovarianceSpec cov;
    std::uint64_t seed = 1;
    // generate_dataset refuses configs that would allocate more doubles.
    double max_elements = 2.0e8;

    bool operator==(const GenConfig&) const = default;
};

std::vector<std::string> validate(const GenConfig& cfg);

struct Dataset
{
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::MatrixXd W;
    Eigen::VectorXd beta;
    Eigen::VectorXd noise;  // y - X beta, bitwise
    double sigma_eps2 = 0.0;
};

/// Coordinates are zero with probability 1 - kappa, otherwise mean zero
/// with variance sigma_beta2 / p. Each coordinate consumes one value draw
/// followed by one Bernoulli draw.
Eigen::VectorXd sample_effects(const GenConfig& cfg, Rng& rng);

/// Noise variance that makes kappa * sigma_beta2 * tr(Sigma)/p explain a
/// fraction h2 of phenotype variance.
double calibrate_noise(double target_h2, double kappa, double sigma_beta2, double trace_over_p);
double calibrate_noise(double target_h2, double kappa, double sigma_beta2, const BlockCovariance& sigma);

/// X = X0 Sigma^{1/2}, W = W0 Sigma^{1/2}, y = X beta + eps.
Dataset generate_dataset(const GenConfig& cfg, Rng& rng);
Dataset generate_dataset(const GenConfig& cfg);

/// Rows of X0 Sigma^{1/2} with X0 standard normal.
Eigen::MatrixXd sample_design(Eigen::Index rows, const BlockCovariance& sigma_sqrt, Rng& rng);

struct PopulationSpec
{
    CovarianceSpec cov;
    double kappa = 1.0;
    double h2 = 0.5;

    bool operator==(const PopulationSpec&) const = default;
};

struct MultiAncestryConfig
{
    std::vector<PopulationSpec> populations;
    Eigen::MatrixXd cross;  // K x K [sigma_ij^2]
    Eigen::Index n = 1;
    Eigen::Index p = 1;
    Eigen::Index n_w = 1;
    std::uint64_t seed = 1;

    [[nodiscard]] std::size_t K() const noexcept { return populations.size(); }
    bool operator==(const MultiAncestryConfig&) const = default;
};

std::vector<std::string> validate(const MultiAncestryConfig& cfg);

/// One shared joint-Gaussian draw per coordinate with covariance cross / p,
/// then an independent Bernoulli(kappa_j) mask per population.
std::vector<Eigen::VectorXd> sample_multi_effects(const MultiAncestryConfig& cfg, Rng& rng);

/// One dataset per population; effects from sample_multi_effects, noise
/// calibrated per population to h_j^2 with signal kappa_j * sigma_jj^2.
std::vector<Dataset> generate_multi_datasets(const MultiAncestryConfig& cfg, Rng& rng);

}  // namespace sumtrain
