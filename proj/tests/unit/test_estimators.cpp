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

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "sumtrain/error.hpp"
#include "sumtrain/estimators.hpp"

using namespace sumtrain;
using Catch::Matchers::WithinAbs;

namespace
{

LDReference random_ld(Eigen::Index n_w, Eigen::Index p, std::uint64_t seed)
{
    Rng rng(seed);
    return LDReference::from_panel(standard_normal_matrix(n_w, p, rng));
}

}  // namespace

TEST_CASE("ridge shrinkage with scalar reference", "[estimators]")
{
    LDReference ld;
    ld.n_w = 5;
    ld.G = 5.0 * Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd s(3);
    s << 1, -2, 3;
    const auto b = ridge_fit(s, ld, 0.5);
    CHECK((b - s / (5.0 * 1.5)).cwiseAbs().maxCoeff() < 1e-14);

    // G = diag(2, 4), n_w = 2, theta = 1: beta = s / (g + 2).
    LDReference d;
    d.n_w = 2;
    d.G = Eigen::Vector2d(2, 4).asDiagonal();
    const auto b2 = ridge_fit(Eigen::Vector2d(4, 6), d, 1.0);
    CHECK_THAT(b2(0), WithinAbs(1.0, 1e-15));
    CHECK_THAT(b2(1), WithinAbs(1.0, 1e-15));
}

TEST_CASE("ridge against a hand 3x3 solve", "[estimators]")
{
    LDReference ld;
    ld.n_w = 1;
    ld.G.resize(3, 3);
    ld.G << 2, 1, 0, 1, 2, 1, 0, 1, 2;
    // (G + I) = [[3,1,0],[1,3,1],[0,1,3]]; solution of (G + I) b = (4, 5, 4) is (1, 1, 1).
    const auto b = ridge_fit(Eigen::Vector3d(4, 5, 4), ld, 1.0);
    CHECK((b - Eigen::Vector3d(1, 1, 1)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("ridge with a dominant penalty", "[estimators]")
{
    const auto ld = random_ld(30, 10, 1);
    Rng rng(2);
    const Eigen::VectorXd s = standard_normal_vector(10, rng);
    const auto b = ridge_fit(s, ld, 1e6);
    CHECK((b - s / (1e6 * 30)).norm() / b.norm() < 1e-3);
}

TEST_CASE("eigen solver agrees with direct ridge", "[estimators]")
{
    for (const auto& [n_w, p] : {std::pair<Eigen::Index, Eigen::Index>{40, 15}, {10, 25}})
    {
        Rng rng(3);
        const Eigen::MatrixXd W = standard_normal_matrix(n_w, p, rng);
        const auto ld = LDReference::from_panel(W);
        const Eigen::VectorXd s = standard_normal_vector(p, rng);
        const auto panel = RidgeSolver::from_panel(W);
        const auto ref = RidgeSolver::from_reference(ld);
        for (const double theta : {1e-3, 0.1, 1.0, 10.0})
        {
            const auto direct = ridge_fit(s, ld, theta);
            CHECK((panel.solve(s, theta) - direct).norm() / direct.norm() < 1e-8);
            CHECK((ref.solve(s, theta) - direct).norm() / direct.norm() < 1e-8);
        }
        CHECK((panel.gram_diagonal() - ld.G.diagonal()).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("threshold fit masks coordinates", "[estimators]")
{
    const Eigen::Vector3d s(2, 5, -1);
    const auto one = threshold_fit(s, {0});
    CHECK(one == Eigen::Vector3d(2, 0, 0));
    CHECK(threshold_fit(s, {0, 1, 2}) == s);
    CHECK_THROWS_AS(threshold_fit(s, {3}), Error);

    Rng rng(4);
    Eigen::VectorXd sparse = standard_normal_vector(50, rng);
    for (Eigen::Index i = 0; i < 50; i += 3)
    {
        sparse(i) = 0.0;
    }
    std::vector<Eigen::Index> sel;
    for (Eigen::Index i = 0; i < 50; i += 2)
    {
        sel.push_back(i);
    }
    const auto b = threshold_fit(sparse, sel);
    Eigen::Index expected = 0;
    for (const auto i : sel)
    {
        expected += sparse(i) != 0.0 ? 1 : 0;
    }
    CHECK((b.array() != 0.0).count() == expected);
}

TEST_CASE("marginal ranking", "[estimators]")
{
    // scores |s| / sqrt(g): 1, 1, 2
    const auto r = marginal_ranking(Eigen::Vector3d(1, -3, 2), Eigen::Vector3d(1, 9, 1));
    CHECK(r == std::vector<Eigen::Index>{2, 0, 1});
    CHECK(top_k(r, 2) == std::vector<Eigen::Index>{2, 0});
}

TEST_CASE("custom and explicit rules", "[estimators]")
{
    const auto ld = random_ld(20, 6, 5);
    Rng rng(6);
    const Eigen::VectorXd s = standard_normal_vector(6, rng);
    CHECK(custom_fit(Eigen::MatrixXd::Identity(6, 6), s) == s);

    const Eigen::MatrixXd A = explicit_matrix(RidgeRule{0.7}, 6, &ld);
    const auto direct = ridge_fit(s, ld, 0.7);
    CHECK((custom_fit(A, s) - direct).norm() / direct.norm() < 1e-8);

    const ThresholdRule thr{{1, 4}};
    const Eigen::MatrixXd S = explicit_matrix(thr, 6, nullptr);
    CHECK(custom_fit(S, s) == threshold_fit(s, thr.indices));
    CHECK(fit(thr, s, nullptr) == threshold_fit(s, thr.indices));
}

TEST_CASE("ensemble fit is the weighted sum", "[estimators]")
{
    const auto ld = random_ld(30, 20, 7);
    Rng rng(8);
    const Eigen::VectorXd s = standard_normal_vector(20, rng);
    const auto ridge = ridge_fit(s, ld, 1.0);
    const auto ranking = marginal_ranking(s, ld.G.diagonal());
    const auto thr = threshold_fit(s, top_k(ranking, 10));

    CHECK(ensemble_fit({{{1.0, RidgeRule{1.0}}}}, s, &ld) == ridge);
    const auto same = ensemble_fit({{{0.5, RidgeRule{1.0}}, {0.5, RidgeRule{1.0}}}}, s, &ld);
    CHECK((same - ridge).norm() < 1e-12);
    const auto mix = ensemble_fit({{{0.3, RidgeRule{1.0}}, {0.7, ThresholdRule{top_k(ranking, 10)}}}}, s, &ld);
    CHECK((mix - (0.3 * ridge + 0.7 * thr)).norm() < 1e-12);
}

TEST_CASE("multi-population fit", "[estimators]")
{
    const auto ld1 = random_ld(30, 8, 9);
    const auto ld2 = random_ld(25, 8, 10);
    Rng rng(11);
    const Eigen::VectorXd s1 = standard_normal_vector(8, rng);
    const Eigen::VectorXd s2 = standard_normal_vector(8, rng);
    const auto f1 = ridge_fit(s1, ld1, 0.5);
    const auto f2 = ridge_fit(s2, ld2, 2.0);

    CHECK(multi_fit({{{1.0, RidgeRule{0.5}, ld1}}}, {s1}) == f1);
    const MultiAncestryRule only_first{{{1.0, RidgeRule{0.5}, ld1}, {0.0, RidgeRule{2.0}, ld2}}};
    CHECK((multi_fit(only_first, {s1, s2}) - f1).norm() < 1e-14);
    const MultiAncestryRule both{{{0.6, RidgeRule{0.5}, ld1}, {0.4, RidgeRule{2.0}, ld2}}};
    CHECK((multi_fit(both, {s1, s2}) - (0.6 * f1 + 0.4 * f2)).norm() < 1e-12);
}
