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

#include <variant>
#include <vector>

#include <Eigen/Core>

#include "sumtrain/summary.hpp"

namespace sumtrain
{

struct RidgeRule
{
    double theta = 1.0;
};

struct ThresholdRule
{
    std::vector<Eigen::Index> indices;  // selected coordinates, 0-based
};

struct CustomRule
{
    Eigen::MatrixXd A;
};

using LinearRule = std::variant<RidgeRule, ThresholdRule, CustomRule>;

/// Solves (G + theta n_w I) beta = s with a Cholesky factorization. Falls
/// back to (theta + 1e-10) n_w when the factorization fails.
Eigen::VectorXd ridge_fit(const Eigen::VectorXd& s_train, const LDReference& ld, double theta);

/// beta_i = s_i on the selected set, zero elsewhere.
Eigen::VectorXd threshold_fit(const Eigen::VectorXd& s_train, const std::vector<Eigen::Index>& selected);

Eigen::VectorXd custom_fit(const Eigen::MatrixXd& A, const Eigen::VectorXd& s_train);

/// Applies any rule; ridge rules need the reference.
Eigen::VectorXd fit(const LinearRule& rule, const Eigen::VectorXd& s_train, const LDReference* ld);

/// The p x p matrix of a rule (ridge: (G + theta n_w I)^{-1}).
Eigen::MatrixXd explicit_matrix(const LinearRule& rule, Eigen::Index p, const LDReference* ld);

/// Coordinates ordered by |s_i| / sqrt(g_ii), largest first; ties keep
/// index order. Zero g_ii ranks last.
std::vector<Eigen::Index> marginal_ranking(const Eigen::VectorXd& s, const Eigen::VectorXd& g_diag);

/// First k entries of a ranking.
std::vector<Eigen::Index> top_k(const std::vector<Eigen::Index>& ranking, Eigen::Index k);

/// Ridge solves for many (s, theta) pairs from one eigendecomposition.
///
/// W'W is represented as Q' diag(lambda) Q with orthonormal rows Q, so
/// (W'W + c I)^{-1} s = s / c - Q' diag(lambda / (c (lambda + c))) Q s.
/// When n_w < p the decomposition comes from the n_w x n_w matrix W W'.
class RidgeSolver
{
public:
    static RidgeSolver from_reference(const LDReference& ld);
    static RidgeSolver from_panel(const Eigen::MatrixXd& W);

    [[nodiscard]] Eigen::Index p() const noexcept { return p_; }
    [[nodiscard]] Eigen::Index n_w() const noexcept { return n_w_; }
    [[nodiscard]] const Eigen::VectorXd& eigenvalues() const noexcept { return lambda_; }
    [[nodiscard]] const Eigen::VectorXd& gram_diagonal() const noexcept { return g_diag_; }

    /// Projection Q s, reusable across a theta grid.
    [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& s) const;
    [[nodiscard]] Eigen::VectorXd solve(
        const Eigen::VectorXd& s, const Eigen::VectorXd& projected, double theta) const;
    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& s, double theta) const;

private:
    Eigen::MatrixXd Q_;  // r x p, orthonormal rows
    Eigen::VectorXd lambda_;
    Eigen::VectorXd g_diag_;
    Eigen::Index p_ = 0;
    Eigen::Index n_w_ = 0;
};

struct EnsembleComponent
{
    double weight = 1.0;
    LinearRule rule;
};

struct EnsembleRule
{
    std::vector<EnsembleComponent> components;
};

/// sum_j w_j A_j s_train; all components share one training vector.
Eigen::VectorXd ensemble_fit(
    const EnsembleRule& rule, const Eigen::VectorXd& s_train, const LDReference* ld);

struct PopulationRule
{
    double weight = 1.0;
    LinearRule rule;
    LDReference ld;
};

struct MultiAncestryRule
{
    std::vector<PopulationRule> populations;  // index 0 is the target
};

/// sum_j w_j A_j s_train_j with one training vector per population.
Eigen::VectorXd multi_fit(const MultiAncestryRule& rule, const std::vector<Eigen::VectorXd>& s_train);

}  // namespace sumtrain
