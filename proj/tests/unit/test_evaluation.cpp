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

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "sumtrain/error.hpp"
#include "sumtrain/evaluation.hpp"

using namespace sumtrain;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{

const double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

TEST_CASE("summary R2 by hand", "[evaluation]")
{
    const auto sigma = BlockCovariance::identity(2);
    const R2Inputs inp{&sigma, 4, 8.0};
    // <s,b>^2 / (n_v |b|^2 |y|^2) = 1 / (4 * 2 * 8)
    const auto r2 = r2_summary(Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 1), inp);
    REQUIRE(r2.has_value());
    CHECK_THAT(*r2, WithinAbs(0.015625, 1e-15));

    const auto scaled = r2_summary(Eigen::Vector2d(1, 0), Eigen::Vector2d(3, 3), inp);
    CHECK_THAT(*scaled, WithinRel(*r2, 1e-14));
    CHECK(*r2_summary(Eigen::Vector2d(1, -1), Eigen::Vector2d(1, 1), inp) == 0.0);
    CHECK_FALSE(r2_summary(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 0), inp).has_value());
}

TEST_CASE("summary R2 reaches one for perfect alignment", "[evaluation]")
{
    // X_v = I, y_v = b, Sigma = I: |b|^4 / (n_v |b|^2 |b|^2) = 1 / n_v.
    const auto sigma = BlockCovariance::identity(3);
    const Eigen::Vector3d b(1, 2, -1);
    const R2Inputs inp{&sigma, 3, b.squaredNorm()};
    CHECK_THAT(*r2_summary(b, b, inp), WithinRel(1.0 / 3.0, 1e-14));
}

TEST_CASE("hold-out R2", "[evaluation]")
{
    Rng rng(1);
    const Eigen::MatrixXd X = standard_normal_matrix(40, 3, rng);
    const Eigen::Vector3d b(1, -1, 0.5);
    const Eigen::VectorXd y = X * b;
    CHECK_THAT(*r2_holdout(X, y, b), WithinAbs(1.0, 1e-12));
    const Eigen::VectorXd ya = 3.0 * y.array() + 2.0;
    CHECK_THAT(*r2_holdout(X, ya, b), WithinAbs(1.0, 1e-12));

    // Hand case: pred = (1, 2, 3), y = (1, 3, 2): r = 0.5.
    Eigen::MatrixXd Xh(3, 1);
    Xh << 1, 2, 3;
    CHECK_THAT(*r2_holdout(Xh, Eigen::Vector3d(1, 3, 2), Eigen::VectorXd::Ones(1)), WithinAbs(0.25, 1e-15));

    const Eigen::Index n = 20000;
    const Eigen::MatrixXd Xn = standard_normal_matrix(n, 2, rng);
    const Eigen::VectorXd noise = standard_normal_vector(n, rng);
    CHECK(*r2_holdout(Xn, noise, Eigen::Vector2d(1, 1)) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK_FALSE(r2_holdout(Xn, noise, Eigen::Vector2d(0, 0)).has_value());
}

TEST_CASE("best grid point selection", "[evaluation]")
{
    CHECK(select_best({5.0}, {0.3}).best_index == 0);
    const auto tie = select_best({1, 2, 3}, {0.2, 0.5, 0.5});
    CHECK(tie.best_index == 1);
    const auto nan = select_best({1, 2, 3}, {kNaN, 0.1, kNaN});
    CHECK(nan.best_index == 1);
    CHECK_THROWS_AS(select_best({1, 2}, {kNaN, kNaN}), Error);
    CHECK_THROWS_AS(select_best({}, {}), Error);
}

TEST_CASE("log grid", "[evaluation]")
{
    const auto g = log_grid(1e-3, 1e2, 25);
    REQUIRE(g.size() == 25);
    CHECK_THAT(g.front(), WithinRel(1e-3, 1e-14));
    CHECK_THAT(g.back(), WithinRel(1e2, 1e-14));
    CHECK_THAT(g[1] / g[0], WithinRel(std::pow(10.0, 5.0 / 24.0), 1e-12));
    CHECK(default_theta_grid() == g);
}

TEST_CASE("ridge tuning avoids an over-shrunk grid point", "[evaluation]")
{
    // Strong correlation makes s = X'y a poor direction, so the
    // huge-penalty fit (proportional to s) loses to a light penalty.
    Rng rng(2);
    const Eigen::Index p = 30;
    Eigen::MatrixXd S(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
    {
        for (Eigen::Index j = 0; j < p; ++j)
        {
            S(i, j) = std::pow(0.95, std::abs(static_cast<double>(i - j)));
        }
    }
    const Eigen::MatrixXd L = S.llt().matrixL();
    const auto draw = [&](Eigen::Index rows) { return Eigen::MatrixXd(standard_normal_matrix(rows, p, rng) * L.transpose()); };
    const auto solver = RidgeSolver::from_panel(draw(2000));
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    beta(0) = 1.0;
    beta(15) = -1.0;
    const Eigen::MatrixXd X = draw(2000);
    const Eigen::VectorXd y = X * beta + 0.3 * standard_normal_vector(2000, rng);
    const Eigen::MatrixXd Xv = draw(500);
    const Eigen::VectorXd yv = Xv * beta + 0.3 * standard_normal_vector(500, rng);
    const auto sigma = BlockCovariance::from_dense(S);
    const ValidationContext ctx{X.transpose() * y, Xv.transpose() * yv, {&sigma, 500, yv.squaredNorm()}};
    const auto t = tune_theta(solver, {0.001, 1e6}, ctx);
    CHECK(t.best_index == 0);
}

TEST_CASE("threshold tuning", "[evaluation]")
{
    const auto sigma = BlockCovariance::identity(4);
    const Eigen::Vector4d s(1, 2, 3, 4);
    const ValidationContext ctx{s, s, {&sigma, 10, 1.0}};
    const auto full = tune_threshold({4}, Eigen::Vector4d::Ones(), ctx);
    CHECK(full.grid == std::vector<double>{4});

    // Strong sparse signal: the support size is picked.
    Rng rng(3);
    const Eigen::Index p = 200;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < 10; ++i)
    {
        beta(i * 7) = 1.0;
    }
    const Eigen::MatrixXd X = standard_normal_matrix(1000, p, rng);
    const Eigen::VectorXd y = X * beta + 0.3 * standard_normal_vector(1000, rng);
    const Eigen::MatrixXd Xv = standard_normal_matrix(500, p, rng);
    const Eigen::VectorXd yv = Xv * beta + 0.3 * standard_normal_vector(500, rng);
    const auto sig = BlockCovariance::identity(p);
    const ValidationContext c2{X.transpose() * y, Xv.transpose() * yv, {&sig, 500, yv.squaredNorm()}};
    const auto t = tune_threshold({1, 3, 5, 10, 20, 40, 80, 200}, Eigen::VectorXd::Ones(p), c2);
    CHECK(t.grid[t.best_index] >= 10.0 / 4.0);
    CHECK(t.grid[t.best_index] <= 10.0 * 4.0);
}

TEST_CASE("simplex grid", "[evaluation]")
{
    const auto two = simplex_grid(2, 0.5);
    REQUIRE(two.size() == 3);
    CHECK(two[0] == std::vector<double>{1.0, 0.0});
    CHECK(two[2] == std::vector<double>{0.0, 1.0});
    CHECK(simplex_grid(3, 0.25).size() == 15);
    CHECK(simplex_grid(2, 0.05).size() == 21);
    CHECK_THROWS_AS(simplex_grid(2, 0.3), Error);
}

TEST_CASE("ensemble tuning", "[evaluation]")
{
    Rng rng(4);
    const Eigen::Index p = 20;
    const auto sigma = BlockCovariance::identity(p);
    const Eigen::VectorXd sv = standard_normal_vector(p, rng);
    const Eigen::VectorXd st = standard_normal_vector(p, rng);
    const ValidationContext ctx{st, sv, {&sigma, 50, 100.0}};

    // Identical components: every weight gives the same value, the first point wins.
    const ComponentFamily same{"a", {1.0}, [&](double) { return Eigen::VectorXd(st); }};
    const auto tie = tune_ensemble({same, same}, ctx, 0.25);
    CHECK(tie.best_index == 0);

    const ComponentFamily one{"a", {1.0}, [&](double) { return Eigen::VectorXd(sv); }};
    const ComponentFamily two{"b", {1.0}, [&](double) { return Eigen::VectorXd(st); }};
    const auto ens = tune_ensemble({one, two}, ctx, 0.05);
    const double best_single = std::max(ens.components[0].best_value, ens.components[1].best_value);
    CHECK(ens.best_value >= best_single - 1e-12);

    // Exhaustive oracle over the same lattice.
    const Eigen::VectorXd a = sv / sv.norm();
    const Eigen::VectorXd b = st / st.norm();
    double oracle = -1.0;
    for (int i = 0; i <= 20; ++i)
    {
        const double w = 1.0 - i * 0.05;
        oracle = std::max(oracle, *ctx.evaluate(w * a + (1.0 - w) * b));
    }
    CHECK_THAT(ens.best_value, WithinRel(oracle, 1e-12));
}

TEST_CASE("two-population optimal weights", "[evaluation]")
{
    const auto excl = optimal_two_pop_weights(2.0, 0.0, 1.0, 3.0, 0.0);
    CHECK(excl.omega1 == 1.0);
    CHECK(excl.omega2 == 0.0);
    const auto sym = optimal_two_pop_weights(1.0, 1.0, 2.0, 2.0, 0.5);
    CHECK_THAT(sym.omega1, WithinAbs(0.5, 1e-15));
    CHECK_THAT(sym.omega2, WithinAbs(0.5, 1e-15));
    // Stationary point at 2.72 with the zero of the numerator at 1.22:
    // the objective decreases on [0, 1], so the far endpoint is wrong.
    const auto far = optimal_two_pop_weights(0.17, 0.94, 0.14, 0.34, 0.22);
    CHECK(far.omega1 == 0.0);
    CHECK(far.omega2 == 1.0);

    Rng rng(5);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    int checked = 0;
    while (checked < 100)
    {
        const double N1 = u(rng), N2 = u(rng), D1 = u(rng), D2 = u(rng);
        const double D3 = (u(rng) - 1.05) * std::sqrt(D1 * D2) / 1.0;
        if (D1 * D2 - D3 * D3 <= 0.0 || D2 * N1 * N1 + D1 * N2 * N2 - 2.0 * D3 * N1 * N2 <= 0.0)
        {
            continue;
        }
        ++checked;
        double best = -1.0;
        double arg = 0.0;
        for (int i = 0; i <= 10000; ++i)
        {
            const double w = i * 1e-4;
            const double f = two_pop_objective(w, N1, N2, D1, D2, D3);
            if (f > best)
            {
                best = f;
                arg = w;
            }
        }
        CHECK(std::abs(optimal_two_pop_weights(N1, N2, D1, D2, D3).omega1 - arg) < 1e-3);
    }
}
