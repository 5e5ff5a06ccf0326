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

#include "sumtrain/covariance.hpp"

#include <Eigen/Eigenvalues>

#include "sumtrain/error.hpp"

namespace sumtrain
{

BlockCovariance::BlockCovariance(std::vector<Eigen::MatrixXd> blocks)
    : blocks_(std::move(blocks))
{
    offsets_.reserve(blocks_.size());
    for (const auto& b : blocks_)
    {
        require(
            b.rows() == b.cols() && b.rows() > 0,
            ErrorKind::validation,
            "covariance blocks must be square and nonempty");
        offsets_.push_back(dim_);
        dim_ += b.rows();
    }
}

BlockCovariance BlockCovariance::identity(Eigen::Index p)
{
    std::vector<Eigen::MatrixXd> blocks(
        static_cast<std::size_t>(p), Eigen::MatrixXd::Identity(1, 1));
    return BlockCovariance(std::move(blocks));
}

BlockCovariance BlockCovariance::from_dense(Eigen::MatrixXd matrix)
{
    std::vector<Eigen::MatrixXd> blocks;
    blocks.push_back(std::move(matrix));
    return BlockCovariance(std::move(blocks));
}

Eigen::MatrixXd BlockCovariance::dense() const
{
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim_, dim_);
    for (std::size_t k = 0; k < blocks_.size(); ++k)
    {
        const auto b = blocks_[k].rows();
        out.block(offsets_[k], offsets_[k], b, b) = blocks_[k];
    }
    return out;
}

Eigen::VectorXd BlockCovariance::diagonal() const
{
    Eigen::VectorXd out(dim_);
    for (std::size_t k = 0; k < blocks_.size(); ++k)
    {
        out.segment(offsets_[k], blocks_[k].rows()) = blocks_[k].diagonal();
    }
    return out;
}

double BlockCovariance::trace() const
{
    double total = 0.0;
    for (const auto& b : blocks_)
    {
        total += b.trace();
    }
    return total;
}

Eigen::VectorXd BlockCovariance::multiply(const Eigen::VectorXd& v) const
{
    require(v.size() == dim_, ErrorKind::validation, "covariance/vector dimension mismatch");
    Eigen::VectorXd out(dim_);
    for (std::size_t k = 0; k < blocks_.size(); ++k)
    {
        const auto b = blocks_[k].rows();
        out.segment(offsets_[k], b).noalias() = blocks_[k] * v.segment(offsets_[k], b);
    }
    return out;
}

double BlockCovariance::quadratic_form(const Eigen::VectorXd& v) const
{
    return v.dot(multiply(v));
}

Eigen::MatrixXd BlockCovariance::right_multiply(const Eigen::MatrixXd& x) const
{
    require(x.cols() == dim_, ErrorKind::validation, "matrix/covariance dimension mismatch");
    Eigen::MatrixXd out(x.rows(), dim_);
    for (std::size_t k = 0; k < blocks_.size(); ++k)
    {
        const auto b = blocks_[k].rows();
        out.middleCols(offsets_[k], b).noalias() = x.middleCols(offsets_[k], b) * blocks_[k];
    }
    return out;
}

bool BlockCovariance::same_partition(const BlockCovariance& other) const
{
    if (blocks_.size() != other.blocks_.size())
    {
        return false;
    }
    for (std::size_t k = 0; k < blocks_.size(); ++k)
    {
        if (blocks_[k].rows() != other.blocks_[k].rows())
        {
            return false;
        }
    }
    return true;
}

BlockCovariance BlockCovariance::product(const BlockCovariance& other) const
{
    if (!same_partition(other))
    {
        return from_dense(dense() * other.dense());
    }
    std::vector<Eigen::MatrixXd> blocks;
    blocks.reserve(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k)
    {
        blocks.emplace_back(blocks_[k] * other.blocks_[k]);
    }
    return BlockCovariance(std::move(blocks));
}

BlockSpectrum::BlockSpectrum(const BlockCovariance& sigma)
{
    values_.resize(sigma.dim());
    vectors_.reserve(sigma.block_count());
    offsets_.reserve(sigma.block_count());
    for (std::size_t k = 0; k < sigma.block_count(); ++k)
    {
        const auto& b = sigma.block(k);
        offsets_.push_back(sigma.offset(k));
        if (b.rows() == 1)
        {
            values_(sigma.offset(k)) = b(0, 0);
            vectors_.emplace_back(Eigen::MatrixXd::Identity(1, 1));
            continue;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
        require(
            solver.info() == Eigen::Success,
            ErrorKind::numerical,
            "eigendecomposition of covariance block failed");
        values_.segment(sigma.offset(k), b.rows()) = solver.eigenvalues();
        vectors_.push_back(solver.eigenvectors());
    }
}

BlockCovariance BlockSpectrum::map(const std::function<double(double)>& f) const
{
    std::vector<Eigen::MatrixXd> blocks;
    blocks.reserve(vectors_.size());
    for (std::size_t k = 0; k < vectors_.size(); ++k)
    {
        const auto& v = vectors_[k];
        Eigen::VectorXd mapped = values_.segment(offsets_[k], v.cols()).unaryExpr(f);
        blocks.emplace_back(v * mapped.asDiagonal() * v.transpose());
    }
    return BlockCovariance(std::move(blocks));
}

}  // namespace sumtrain
