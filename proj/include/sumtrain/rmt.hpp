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

#include <vector>

#include <Eigen/Core>

#include "sumtrain/covariance.hpp"

namespace sumtrain
{

/// tau solving 1/tau = 1 + (1/n) sum_i lambda_i / (tau lambda_i + theta).
double solve_tau(const Eigen::VectorXd& spectrum, double n, double theta);

/// rho = T / (1 - T), T = (tau^2 / n) sum_i lambda_i^2 / (tau lambda_i + theta)^2.
double compute_rho(const Eigen::VectorXd& spectrum, double n, double theta, double tau);

/// Identity-covariance closed forms with gamma = p / n.
double identity_tau(double gamma, double theta);
double identity_rho(double gamma, double theta);

struct SpectralState
{
    double tau = 1.0;
    double rho = 0.0;
    double theta = 1.0;
    double gamma = 1.0;
};

SpectralState spectral_state(const Eigen::VectorXd& spectrum, double n, double theta);

/// First- and second-order equivalents (D, E) of n_w A and n_w^2 A' Sigma A,
/// stored with the block partition of Sigma.
struct RuleEquivalents
{
    BlockCovariance D;
    BlockCovariance E;
};

/// D = (tau Sigma + theta)^{-1}, E = (rho + 1) D Sigma D.
RuleEquivalents ridge_equivalents(const BlockSpectrum& sigma, double n_w, double theta);

/// Panel covariance sigma, target covariance target:
/// E = M C M + [tau^2/n_w tr(Sigma M C M) / (1 - T)] M Sigma M with
/// M = (tau Sigma + theta)^{-1} and C = target. Reduces to the ridge form
/// when target = sigma.
RuleEquivalents ridge_equivalents_cross(
    const BlockSpectrum& sigma, const BlockCovariance& target, double n_w, double theta);

/// D = selector of the given set, E = D Sigma D.
RuleEquivalents threshold_equivalents(const std::vector<Eigen::Index>& selected, const BlockCovariance& sigma);

struct TheoryTraces
{
    double tr_sigma = 0.0;
    double tr_D_sigma2 = 0.0;  // tr(D Sigma^2)
    double tr_E_sigma = 0.0;   // tr(E Sigma)
    double tr_E_sigma2 = 0.0;  // tr(E Sigma^2)
};

/// Traces restricted to the selected set, computed on submatrices only.
TheoryTraces threshold_traces(const std::vector<Eigen::Index>& selected, const Eigen::MatrixXd& sigma);

TheoryTraces traces_of(const RuleEquivalents& eq, const BlockCovariance& sigma);

enum class PrefactorMode
{
    unit_variance,  // 1 / var(y) with var(y) = kappa sigma_beta2 tr(Sigma)/p + sigma_eps2
    explicit_value,
};

struct TheoryInputs
{
    double n_train = 1.0;
    double n_valid = 1.0;
    double n_w = 1.0;
    double p = 1.0;
    double kappa = 1.0;
    double sigma_beta2 = 1.0;
    double h2 = 0.5;
    PrefactorMode prefactor_mode = PrefactorMode::unit_variance;
    double prefactor = 1.0;  // explicit_value mode: n_v / |y_v|^2
};

void validate(const TheoryInputs& inp);

/// prefactor (n_tr/p) kappa sigma_beta2 tr(D Sigma^2)^2
///   / (tr(Sigma) tr(E Sigma) / h2 + n_tr tr(E Sigma^2)).
double theory_r2_from_traces(const TheoryInputs& inp, const TheoryTraces& traces);

double theory_r2_general(const TheoryInputs& inp, const BlockCovariance& sigma, const RuleEquivalents& eq);

/// Ridge curve from the eigenvalues of Sigma alone.
double theory_r2_ridge(const TheoryInputs& inp, const Eigen::VectorXd& spectrum, double theta);

/// (theta + tau)/(rho + 1) * n_w / (p/h2 + n_tr), the closed form stated for
/// identity covariance with gamma = p / n_w.
double identity_ridge_closed_form_r2(double theta, double gamma_w, double h2, double p, double n_train, double n_w);

struct WeightedEquivalents
{
    double weight = 1.0;
    RuleEquivalents eq;
};

/// D = sum_j w_j D_j, E = sum_{i != j} w_i w_j D_i Sigma D_j + sum_j w_j^2 E_j.
RuleEquivalents combine_ensemble(const std::vector<WeightedEquivalents>& components, const BlockCovariance& sigma);

double theory_r2_ensemble(
    const TheoryInputs& inp, const BlockCovariance& sigma, const std::vector<WeightedEquivalents>& components);

struct PopulationTheory
{
    BlockCovariance sigma;
    RuleEquivalents eq;  // E built against the target covariance
    double kappa = 1.0;
    double h2 = 0.5;
    double weight = 1.0;
};

struct MultiTheoryResult
{
    double r2 = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

/// Population 0 is the target; cross is the K x K matrix [sigma_ij^2].
/// Shared sizes come from inp; its kappa, sigma_beta2 and h2 are ignored in
/// favor of the per-population values.
MultiTheoryResult theory_r2_multi(
    const TheoryInputs& inp, const std::vector<PopulationTheory>& pops, const Eigen::MatrixXd& cross);

struct TwoPopTerms
{
    double N1 = 0.0;
    double N2 = 0.0;
    double D1 = 0.0;
    double D2 = 0.0;
    double D3 = 0.0;
};

/// Numerator and denominator coefficients of the two-population R^2 in
/// the target-weight omega1 (weights in pops are ignored).
TwoPopTerms two_population_terms(
    const TheoryInputs& inp, const std::vector<PopulationTheory>& pops, const Eigen::MatrixXd& cross);

/// (1/n) tr(Sigma) (1/p) tr(C Sigma) + (1/p) tr(C Sigma^2).
double trace_second_moment_rhs(const Eigen::MatrixXd& C, const Eigen::MatrixXd& sigma, double n);

/// tr(A B) for block matrices with equal partitions.
double trace_product(const BlockCovariance& a, const BlockCovariance& b);

}  // namespace sumtrain
