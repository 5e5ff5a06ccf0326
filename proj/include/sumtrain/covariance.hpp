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
#include <vector>

#include <Eigen/Core>

namespace sumtrain
{

/// Symmetric matrix stored as a list of diagonal blocks.
///
/// Block-diagonal LD structure keeps Sigma^{1/2}, spectral functions and
/// quadratic forms at O(sum b_k^3) instead of O(p^3). A dense covariance is
/// the single-block case.
class BlockCovariance
{
public:
    BlockCovariance() = default;
    explicit BlockCovariance(std::vector<Eigen::MatrixXd> blocks);

    static BlockCovariance identity(Eigen::Index p);
    static BlockCovariance from_dense(Eigen::MatrixXd matrix);

    [[nodiscard]] Eigen::Index dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t block_count() const noexcept { return blocks_.size(); }
    [[nodiscard]] const Eigen::MatrixXd& block(std::size_t k) const { return blocks_[k]; }
    [[nodiscard]] Eigen::Index offset(std::size_t k) const { return offsets_[k]; }

    [[nodiscard]] Eigen::MatrixXd dense() const;
    [[nodiscard]] Eigen::VectorXd diagonal() const;
    [[nodiscard]] double trace() const;

    /// Sigma * v
    [[nodiscard]] Eigen::VectorXd multiply(const Eigen::VectorXd& v) const;
    /// v' Sigma v
    [[nodiscard]] double quadratic_form(const Eigen::VectorXd& v) const;
    /// x * Sigma, applied to column blocks of x.
    [[nodiscard]] Eigen::MatrixXd right_multiply(const Eigen::MatrixXd& x) const;
    /// this * other, both with identical block partitions.
    [[nodiscard]] BlockCovariance product(const BlockCovariance& other) const;

    [[nodiscard]] bool same_partition(const BlockCovariance& other) const;

private:
    std::vector<Eigen::MatrixXd> blocks_;
    std::vector<Eigen::Index> offsets_;
    Eigen::Index dim_ = 0;
};

/// Per-block eigendecomposition of a BlockCovariance, computed once and
/// reused for every spectral function f(Sigma).
class BlockSpectrum
{
public:
    explicit BlockSpectrum(const BlockCovariance& sigma);

    /// All eigenvalues, concatenated block by block.
    [[nodiscard]] const Eigen::VectorXd& eigenvalues() const noexcept { return values_; }
    [[nodiscard]] Eigen::Index dim() const noexcept { return values_.size(); }

    /// V f(Lambda) V' per block.
    [[nodiscard]] BlockCovariance map(const std::function<double(double)>& f) const;

private:
    std::vector<Eigen::MatrixXd> vectors_;
    std::vector<Eigen::Index> offsets_;
    Eigen::VectorXd values_;
};

}  // namespace sumtrain
