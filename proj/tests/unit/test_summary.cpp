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
#include <cmath>

#include "sumtrain/error.hpp"
#include "sumtrain/summary.hpp"

using namespace sumtrain;
using Catch::Matchers::WithinAbs;

TEST_CASE("summary statistics are X'y", "[summary]")
{
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd y(2);
    y << 3, -1;
    const auto st = compute_summary(I, y);
    CHECK(st.s(0) == 3.0);
    CHECK(st.s(1) == -1.0);
    CHECK(st.n == 2);
    CHECK(st.y_norm2.value() == 10.0);

    Eigen::MatrixXd X(3, 2);
    X << 1, 2, 3, 4, 5, 6;
    Eigen::VectorXd y3(3);
    y3 << 1, 0, -1;
    const auto s3 = compute_summary(X, y3);
    CHECK(s3.s(0) == -4.0);
    CHECK(s3.s(1) == -4.0);

    const auto zero = compute_summary(X, Eigen::VectorXd::Zero(3));
    CHECK(zero.s.isZero(0.0));
    CHECK_FALSE(zero.y_norm2.has_value());
}

TEST_CASE("LD reference validation", "[summary]")
{
    Rng rng(1);
    const Eigen::MatrixXd W = standard_normal_matrix(20, 5, rng);
    const auto ld = LDReference::from_panel(W);
    CHECK(ld.n_w == 20);
    CHECK((ld.G - W.transpose() * W).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_NOTHROW(validate(ld));

    auto bad = ld;
    bad.G(0, 1) += 1e-3;
    try
    {
        validate(bad);
        FAIL("expected a failure");
    }
    catch (const Error& e)
    {
        CHECK(std::string(e.what()).find("asymmetry") != std::string::npos);
    }
}

TEST_CASE("oracle covariance factor", "[summary]")
{
    Rng rng(2);
    const Eigen::MatrixXd X = standard_normal_matrix(30, 4, rng);
    const Eigen::VectorXd y = standard_normal_vector(30, rng);
    const auto st = compute_summary(X, y);
    const auto sigma = BlockCovariance::identity(4);

    const auto zero_beta = XtYCovariance::oracle(st, sigma, Eigen::VectorXd::Zero(4));
    CHECK((zero_beta.v() - st.s).cwiseAbs().maxCoeff() == 0.0);

    Eigen::VectorXd beta(4);
    beta << 1, -2, 0.5, 0;
    const auto cov = XtYCovariance::oracle(st, sigma, beta);
    CHECK_THAT(cov.v().norm(), WithinAbs((st.s - 30.0 * beta).norm(), 1e-12));

    // X'X = n Sigma and eps = 0 gives v = 0.
    const Eigen::MatrixXd Xo = std::sqrt(4.0) * Eigen::MatrixXd::Identity(4, 4);
    const auto exact = compute_summary(Xo, Xo * beta);
    const auto none = XtYCovariance::oracle(exact, sigma, beta);
    CHECK(none.v().norm() < 1e-12);
}

TEST_CASE("train size rounding", "[summary]")
{
    CHECK(train_size(1000, 0.8) == 800);
    CHECK(train_size(5, 0.5) == 2);
    CHECK(train_size(7, 0.5) == 4);
    CHECK_THROWS_AS(train_size(2, 0.1), Error);
    CHECK_THROWS_AS(train_size(10, 1.0), Error);
}

TEST_CASE("pseudo split is additive and unbiased", "[summary]")
{
    Rng rng(3);
    const Eigen::MatrixXd X = standard_normal_matrix(100, 6, rng);
    Eigen::VectorXd beta = standard_normal_vector(6, rng);
    const Eigen::VectorXd y = X * beta + standard_normal_vector(100, rng);
    const auto st = compute_summary(X, y);
    const auto cov = XtYCovariance::oracle(st, BlockCovariance::identity(6), beta);

    const auto one = pseudo_split(st, cov, 0.8, rng);
    CHECK(one.s_train + one.s_valid == st.s);
    CHECK(one.n_train == 80);
    CHECK(one.n_valid == 20);

    const int reps = 10000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(6);
    Eigen::VectorXd sum2 = Eigen::VectorXd::Zero(6);
    const Eigen::VectorXd v = cov.v();
    double along = 0.0;
    double along2 = 0.0;
    for (int r = 0; r < reps; ++r)
    {
        const auto sp = pseudo_split(st, cov, 0.8, rng);
        sum += sp.s_train;
        sum2 += sp.s_train.cwiseProduct(sp.s_train);
        const double proj = v.dot(sp.s_train) / v.norm();
        along += proj;
        along2 += proj * proj;
    }
    const Eigen::VectorXd mean = sum / reps;
    const Eigen::VectorXd var = sum2 / reps - mean.cwiseProduct(mean);
    for (Eigen::Index i = 0; i < 6; ++i)
    {
        CHECK(std::abs(mean(i) - 0.8 * st.s(i)) <= 3.0 * std::sqrt(var(i) / reps));
    }
    const double m = along / reps;
    const double var_along = along2 / reps - m * m;
    const double target = 0.8 * 0.2 * v.squaredNorm();
    CHECK(std::abs(var_along / target - 1.0) < 0.05);
}

TEST_CASE("expected and plugin resamplers draw with the right scale", "[summary]")
{
    // Plugin with M = I: Cov^{1/2} h has variance c per coordinate.
    const auto plug = XtYCovariance::plugin(4.0, Eigen::MatrixXd::Identity(3, 3));
    Rng rng(4);
    double acc = 0.0;
    const int reps = 20000;
    for (int r = 0; r < reps; ++r)
    {
        acc += plug.sample_root(rng, ResampleNoise::gaussian).squaredNorm();
    }
    CHECK(std::abs(acc / reps / 12.0 - 1.0) < 0.03);

    Rng rng2(4);
    const Eigen::MatrixXd F = 2.0 * Eigen::MatrixXd::Identity(3, 3);
    const auto fac = XtYCovariance::plugin_factor(1.0, F);
    acc = 0.0;
    for (int r = 0; r < reps; ++r)
    {
        acc += fac.sample_root(rng2, ResampleNoise::rademacher).squaredNorm();
    }
    CHECK_THAT(acc / reps, WithinAbs(12.0, 1e-9));
}

TEST_CASE("individual split partitions the rows", "[summary]")
{
    Rng rng(5);
    const Eigen::MatrixXd X = standard_normal_matrix(50, 3, rng);
    const Eigen::VectorXd y = standard_normal_vector(50, rng);
    const auto sp = individual_split(X, y, 0.8, rng);
    std::vector<Eigen::Index> all = sp.train_rows;
    all.insert(all.end(), sp.valid_rows.begin(), sp.valid_rows.end());
    std::sort(all.begin(), all.end());
    for (Eigen::Index i = 0; i < 50; ++i)
    {
        CHECK(all[static_cast<std::size_t>(i)] == i);
    }
    const Eigen::VectorXd total = sp.X_train.transpose() * sp.y_train + sp.X_valid.transpose() * sp.y_valid;
    CHECK((total - X.transpose() * y).cwiseAbs().maxCoeff() < 1e-12);

    const Eigen::MatrixXd Xb = Eigen::MatrixXd::Zero(1000, 1);
    const Eigen::VectorXd yb = Eigen::VectorXd::Zero(1000);
    double sizes = 0.0;
    const int reps = 10000;
    for (int r = 0; r < reps; ++r)
    {
        sizes += static_cast<double>(individual_split(Xb, yb, 0.8, rng).train_rows.size());
    }
    CHECK(std::abs(sizes / reps - 800.0) <= 3.0 * std::sqrt(1000 * 0.16));
}
