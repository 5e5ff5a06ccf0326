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
#include <random>

#include <Eigen/Core>

namespace sumtrain
{

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept
{
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Independent stream for (master seed, index), e.g. one per replicate.
inline Rng substream(std::uint64_t master, std::uint64_t index)
{
    return Rng(derive_seed(master, index));
}

inline Eigen::VectorXd standard_normal_vector(Eigen::Index size, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd out(size);
    for (Eigen::Index i = 0; i < size; ++i)
    {
        out(i) = normal(rng);
    }
    return out;
}

inline Eigen::VectorXd rademacher_vector(Eigen::Index size, Rng& rng)
{
    std::bernoulli_distribution coin(0.5);
    Eigen::VectorXd out(size);
    for (Eigen::Index i = 0; i < size; ++i)
    {
        out(i) = coin(rng) ? 1.0 : -1.0;
    }
    return out;
}

/// Row-major fill so that the draw order does not depend on Eigen storage.
inline Eigen::MatrixXd standard_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
    {
        for (Eigen::Index j = 0; j < cols; ++j)
        {
            out(i, j) = normal(rng);
        }
    }
    return out;
}

}  // namespace sumtrain
