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

#include <Eigen/Eigenvalues>

#include "sumtrain/error.hpp"
#include "sumtrain/model_gen.hpp"
#include "sumtrain/rmt.hpp"

using namespace sumtrain;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{

TheoryInputs inputs(double p, double n_train, double n_w, double h2)
{
    TheoryInputs inp;
    inp.p = p;
    inp.n_train = n_train;
    inp.n_valid = 200;
    inp.n_w = n_w;
    inp.h2 = h2;
    inp.kappa = 1.0;
    inp.sigma_beta2 = 1.0;
    return inp;
}

BlockCovariance ar1_cov(Eigen::Index p, Eigen::Index blocks, double rho)
{
    CovarianceSpec spec;
    spec.kind = CovarianceKind::block_ar1;
    spec.p = p;
    spec.n_block = blocks;
    spec.rho = rho;
    return make_covariance(spec);
}

}  // namespace

TEST_CASE("fixed point closed forms", "[rmt]")
{
    CHECK_THAT(identity_tau(1.0, 1.0), WithinAbs((std::sqrt(5.0) - 1.0) / 2.0, 1e-15));
    CHECK_THAT(identity_rho(1.0, 1.0), WithinAbs((3.0 - std::sqrt(5.0)) / (2.0 * std::sqrt(5.0)), 1e-15));
    CHECK_THAT(identity_tau(1.0, 1.0), WithinAbs(0.6180340, 1e-7));
    CHECK_THAT(identity_rho(1.0, 1.0), WithinAbs(0.1708204, 1e-7));

    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(100);
    CHECK(std::abs(solve_tau(ones, 100.0 / 1e-4, 1.0) - 1.0) < 1e-3);
    CHECK(std::abs(solve_tau(ones, 100.0, 1e4) - 1.0) < 1e-3);
    const double tau = solve_tau(ones, 100.0, 1e4);
    CHECK(compute_rho(ones, 100.0, 1e4, tau) < 1e-3);
}

TEST_CASE("solver matches closed forms on a grid", "[rmt]")
{
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(400);
    double worst = 0.0;
    for (const double gamma : {0.25, 0.5, 1.0, 2.0})
    {
        for (int i = 0; i < 20; ++i)
        {
            const double theta = std::pow(10.0, -3.0 + 6.0 * i / 19.0);
            const double n = 400.0 / gamma;
            const double tau = solve_tau(ones, n, theta);
            const double rho = compute_rho(ones, n, theta, tau);
            worst = std::max(worst, std::abs(tau - identity_tau(gamma, theta)));
            worst = std::max(worst, std::abs(rho - identity_rho(gamma, theta)));
            CHECK(rho >= 0.0);
        }
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("invalid fixed-point inputs", "[rmt]")
{
    CHECK_THROWS_AS(solve_tau(Eigen::VectorXd::Ones(3), 10.0, 0.0), Error);
    CHECK_THROWS_AS(solve_tau(Eigen::VectorXd(), 10.0, 1.0), Error);
    CHECK_THROWS_AS(solve_tau(-Eigen::VectorXd::Ones(3), 10.0, 1.0), Error);
}

TEST_CASE("ridge equivalents for identity covariance", "[rmt]")
{
    const auto sigma = BlockCovariance::identity(100);
    const auto eq = ridge_equivalents(BlockSpectrum(sigma), 100.0, 1.0);
    const double tau = identity_tau(1.0, 1.0);
    const double rho = identity_rho(1.0, 1.0);
    CHECK((eq.D.dense() - Eigen::MatrixXd::Identity(100, 100) / (tau + 1.0)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(
        (eq.E.dense() - (rho + 1.0) * Eigen::MatrixXd::Identity(100, 100) / std::pow(tau + 1.0, 2))
            .cwiseAbs()
            .maxCoeff()
        < 1e-12);
    const auto t = traces_of(eq, sigma);
    CHECK_THAT(t.tr_D_sigma2, WithinAbs(61.8034, 1e-4));

    // Cross form with target = sigma reduces to the plain form.
    const auto cross = ridge_equivalents_cross(BlockSpectrum(sigma), sigma, 100.0, 1.0);
    CHECK((cross.E.dense() - eq.E.dense()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ridge E is symmetric PSD", "[rmt]")
{
    const auto sigma = ar1_cov(40, 4, 0.8);
    const auto eq = ridge_equivalents(BlockSpectrum(sigma), 30.0, 0.3);
    const Eigen::MatrixXd E = eq.E.dense();
    CHECK((E - E.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(E);
    CHECK(eig.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("threshold traces", "[rmt]")
{
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(5, 5);
    const auto all = threshold_traces({0, 1, 2, 3, 4}, I);
    CHECK(all.tr_D_sigma2 == 5.0);
    CHECK(all.tr_E_sigma == 5.0);
    const auto one = threshold_traces({0}, I);
    CHECK(one.tr_D_sigma2 == 1.0);
    CHECK(one.tr_E_sigma == 1.0);
    CHECK(one.tr_E_sigma2 == 1.0);

    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(4, 4);
    s(0, 1) = s(1, 0) = 0.9;
    CHECK_THAT(threshold_traces({0, 1}, s).tr_D_sigma2, WithinAbs(3.62, 1e-14));

    // Block equivalents give the same traces.
    const auto blocks = ar1_cov(8, 2, 0.6);
    const std::vector<Eigen::Index> sel{0, 2, 5, 7};
    const auto a = traces_of(threshold_equivalents(sel, blocks), blocks);
    const auto b = threshold_traces(sel, blocks.dense());
    CHECK_THAT(a.tr_D_sigma2, WithinRel(b.tr_D_sigma2, 1e-12));
    CHECK_THAT(a.tr_E_sigma, WithinRel(b.tr_E_sigma, 1e-12));
    CHECK_THAT(a.tr_E_sigma2, WithinRel(b.tr_E_sigma2, 1e-12));
}

TEST_CASE("ridge theory for identity covariance", "[rmt]")
{
    // Traces reduce to scalars; R^2 = h2 n_tr / ((rho + 1)(p/h2 + n_tr)).
    const auto inp = inputs(1000, 800, 1000, 0.5);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(1000);
    const double rho = identity_rho(1.0, 1.0);
    const double hand = 0.5 * 800 / ((rho + 1.0) * (1000 / 0.5 + 800));
    const double r2 = theory_r2_ridge(inp, ones, 1.0);
    CHECK_THAT(r2, WithinAbs(hand, 1e-10));
    CHECK_THAT(r2, WithinAbs(0.122014567, 1e-9));

    const auto sigma = BlockCovariance::identity(1000);
    const double general = theory_r2_general(inp, sigma, ridge_equivalents(BlockSpectrum(sigma), 1000, 1.0));
    CHECK_THAT(general, WithinAbs(r2, 1e-12));
}

TEST_CASE("identity closed form", "[rmt]")
{
    const double v = identity_ridge_closed_form_r2(1.0, 1.0, 0.5, 1000, 800, 1000);
    const double tau = identity_tau(1.0, 1.0);
    const double rho = identity_rho(1.0, 1.0);
    CHECK_THAT(v, WithinAbs((1.0 + tau) / (rho + 1.0) * 1000.0 / 2800.0, 1e-15));
    CHECK_THAT(v, WithinAbs(0.493558, 1e-5));
}

TEST_CASE("theory R2 grows with heritability", "[rmt]")
{
    const Eigen::VectorXd spec = BlockSpectrum(ar1_cov(200, 10, 0.9)).eigenvalues();
    double last = 0.0;
    for (const double h2 : {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9})
    {
        const double r2 = theory_r2_ridge(inputs(200, 160, 100, h2), spec, 0.5);
        CHECK(r2 > last);
        last = r2;
    }
    CHECK(theory_r2_ridge(inputs(200, 160, 100, 1e-9), spec, 0.5) < 1e-6);
}

TEST_CASE("spectral and block ridge theory agree", "[rmt]")
{
    const auto sigma = ar1_cov(60, 3, 0.7);
    const auto inp = inputs(60, 50, 40, 0.6);
    for (const double theta : {0.01, 0.3, 5.0})
    {
        const double a = theory_r2_ridge(inp, BlockSpectrum(sigma).eigenvalues(), theta);
        const double b = theory_r2_general(inp, sigma, ridge_equivalents(BlockSpectrum(sigma), 40, theta));
        CHECK_THAT(a, WithinRel(b, 1e-10));
    }
}

TEST_CASE("ensemble theory", "[rmt]")
{
    const auto sigma = BlockCovariance::identity(50);
    const auto inp = inputs(50, 40, 50, 0.5);
    const auto eq = ridge_equivalents(BlockSpectrum(sigma), 50, 1.0);
    const double single = theory_r2_general(inp, sigma, eq);
    CHECK_THAT(theory_r2_ensemble(inp, sigma, {{1.0, eq}}), WithinRel(single, 1e-14));

    const auto thr = threshold_equivalents({0, 1, 2, 3, 4}, sigma);
    CHECK_THAT(theory_r2_ensemble(inp, sigma, {{1.0, eq}, {0.0, thr}}), WithinRel(single, 1e-14));

    // Two identical ridge components at (0.5, 0.5): D = D1, E = (E1 + D1 D1) / 2.
    const double tau = identity_tau(1.0, 1.0);
    const double rho = identity_rho(1.0, 1.0);
    const double d = 1.0 / (tau + 1.0);
    const double e = 0.5 * (rho + 1.0) * d * d + 0.5 * d * d;
    const double p = 50;
    const double hand = 0.5 * (40 / p) * std::pow(p * d, 2) / (p * p * e / 0.5 + 40 * p * e);
    CHECK_THAT(theory_r2_ensemble(inp, sigma, {{0.5, eq}, {0.5, eq}}), WithinRel(hand, 1e-12));
}

TEST_CASE("second-moment trace identity", "[rmt]")
{
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(20, 20);
    CHECK_THAT(trace_second_moment_rhs(I, I, 40.0), WithinAbs(1.5, 1e-15));
    CHECK(trace_second_moment_rhs(Eigen::MatrixXd::Zero(20, 20), I, 40.0) == 0.0);
}

TEST_CASE("multi-population theory", "[rmt]")
{
    const Eigen::Index p = 30;
    Eigen::VectorXd l1(p);
    Eigen::VectorXd l2(p);
    for (Eigen::Index i = 0; i < p; ++i)
    {
        l1(i) = 0.5 + 0.05 * static_cast<double>(i);
        l2(i) = 1.5 - 0.03 * static_cast<double>(i);
    }
    const BlockCovariance s1 = BlockCovariance::from_dense(l1.asDiagonal());
    const BlockCovariance s2 = BlockCovariance::from_dense(l2.asDiagonal());
    const double n_w = 40;
    const double th1 = 0.7;
    const double th2 = 1.3;
    auto inp = inputs(p, 25, n_w, 0.5);

    // K = 1 matches the single-population formula.
    PopulationTheory only{s1, ridge_equivalents(BlockSpectrum(s1), n_w, th1), 0.4, 0.5, 1.0};
    Eigen::MatrixXd c1(1, 1);
    c1 << 1.0;
    auto single_inp = inp;
    single_inp.kappa = 0.4;
    CHECK_THAT(theory_r2_multi(inp, {only}, c1).r2,
               WithinRel(theory_r2_general(single_inp, s1, only.eq), 1e-12));

    // Independent diagonal assembly of the coefficient terms.
    const double tau1 = solve_tau(l1, n_w, th1);
    const double tau2 = solve_tau(l2, n_w, th2);
    const Eigen::ArrayXd M1 = 1.0 / (tau1 * l1.array() + th1);
    const Eigen::ArrayXd M2 = 1.0 / (tau2 * l2.array() + th2);
    const auto E_of = [&](const Eigen::ArrayXd& M, const Eigen::ArrayXd& l, double tau) {
        const double T = tau * tau / n_w * (l.square() * M.square()).sum();
        const Eigen::ArrayXd MCM = M * l1.array() * M;
        const double coef = tau * tau / n_w * (l * MCM).sum() / (1.0 - T);
        return Eigen::ArrayXd(MCM + coef * M * l * M);
    };
    const Eigen::ArrayXd E1 = E_of(M1, l1.array(), tau1);
    const Eigen::ArrayXd E2 = E_of(M2, l2.array(), tau2);
    const double k1 = 0.4, k2 = 0.6, s11 = 1.0, s22 = 1.2, s12 = 0.5, h1 = 0.5, h2 = 0.7, ntr = 25;
    const auto A1 = l1.array();
    const auto A2 = l2.array();
    const double N1 = k1 * s11 / p * (M1 * A1 * A1).sum();
    const double N2 = k1 * k2 * s12 / p * (A1 * M2 * A2).sum();
    const double D1 = k1 * s11 / p / ntr / h1 * A1.sum() * (E1 * A1).sum() + k1 * s11 / p * (E1 * A1 * A1).sum();
    const double D2 = k2 * s22 / p / ntr / h2 * A2.sum() * (E2 * A2).sum() + k2 * s22 / p * (E2 * A2 * A2).sum();
    const double D3 = k1 * k2 * s12 / p * (A1 * M1 * A1 * M2 * A2).sum();

    PopulationTheory a{s1, ridge_equivalents_cross(BlockSpectrum(s1), s1, n_w, th1), k1, h1, 0.7};
    PopulationTheory b{s2, ridge_equivalents_cross(BlockSpectrum(s2), s1, n_w, th2), k2, h2, 0.3};
    Eigen::MatrixXd cross(2, 2);
    cross << s11, s12, s12, s22;
    const auto terms = two_population_terms(inp, {a, b}, cross);
    CHECK_THAT(terms.N1, WithinRel(N1, 1e-10));
    CHECK_THAT(terms.N2, WithinRel(N2, 1e-10));
    CHECK_THAT(terms.D1, WithinRel(D1, 1e-10));
    CHECK_THAT(terms.D2, WithinRel(D2, 1e-10));
    CHECK_THAT(terms.D3, WithinRel(D3, 1e-10));

    // R^2 at weights (0.7, 0.3) is the prefactor times the weight objective.
    const double pref = 1.0 / (k1 * s11 * A1.sum() / p / h1);
    const double w = 0.7;
    const double objective = std::pow(w * N1 + (1 - w) * N2, 2)
                             / (w * w * D1 + (1 - w) * (1 - w) * D2 + 2 * w * (1 - w) * D3);
    CHECK_THAT(theory_r2_multi(inp, {a, b}, cross).r2, WithinRel(pref * objective, 1e-10));

    // Uncorrelated effects: the second population carries no signal.
    Eigen::MatrixXd indep = cross;
    indep(0, 1) = indep(1, 0) = 0.0;
    const auto t0 = two_population_terms(inp, {a, b}, indep);
    CHECK(t0.N2 == 0.0);
    CHECK(t0.D3 == 0.0);
    auto a1 = a;
    a1.weight = 1.0;
    auto b0 = b;
    b0.weight = 0.0;
    CHECK_THAT(theory_r2_multi(inp, {a1, b0}, indep).r2, WithinRel(theory_r2_multi(inp, {a1}, c1 * s11).r2, 1e-12));
}
