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

#include "sumtrain/rmt.hpp"

#include <cmath>
#include <sstream>

#include "sumtrain/error.hpp"
#include "sumtrain/model_gen.hpp"

namespace sumtrain
{

namespace
{

void check_spectrum(const Eigen::VectorXd& spectrum, double n, double theta)
{
    require(spectrum.size() >= 1, ErrorKind::validation, "spectrum is empty");
    require(spectrum.allFinite() && spectrum.minCoeff() >= 0.0, ErrorKind::validation, "spectrum must be >= 0");
    require(n > 0.0, ErrorKind::validation, "sample size must be positive");
    require(theta > 0.0 && std::isfinite(theta), ErrorKind::validation, "theta must be > 0");
}

/// 1 - tau - (1/n) sum tau lambda / (tau lambda + theta); strictly decreasing.
double tau_equation(const Eigen::VectorXd& spectrum, double n, double theta, double tau, double& slope)
{
    const Eigen::ArrayXd denom = tau * spectrum.array() + theta;
    slope = -1.0 - (theta * spectrum.array() / denom.square()).sum() / n;
    return 1.0 - tau - (tau * spectrum.array() / denom).sum() / n;
}

BlockCovariance add(const BlockCovariance& a, const BlockCovariance& b, double alpha)
{
    if (!a.same_partition(b))
    {
        return BlockCovariance::from_dense(a.dense() + alpha * b.dense());
    }
    std::vector<Eigen::MatrixXd> blocks;
    blocks.reserve(a.block_count());
    for (std::size_t k = 0; k < a.block_count(); ++k)
    {
        blocks.emplace_back(a.block(k) + alpha * b.block(k));
    }
    return BlockCovariance(std::move(blocks));
}

BlockCovariance scaled(const BlockCovariance& a, double alpha)
{
    std::vector<Eigen::MatrixXd> blocks;
    blocks.reserve(a.block_count());
    for (std::size_t k = 0; k < a.block_count(); ++k)
    {
        blocks.emplace_back(alpha * a.block(k));
    }
    return BlockCovariance(std::move(blocks));
}

BlockCovariance selector(const std::vector<Eigen::Index>& selected, const BlockCovariance& like)
{
    require(!selected.empty(), ErrorKind::validation, "selection is empty");
    Eigen::VectorXd mask = Eigen::VectorXd::Zero(like.dim());
    for (const auto i : selected)
    {
        require(i >= 0 && i < like.dim(), ErrorKind::validation, "selection index out of range");
        mask(i) = 1.0;
    }
    std::vector<Eigen::MatrixXd> blocks;
    for (std::size_t k = 0; k < like.block_count(); ++k)
    {
        const auto b = like.block(k).rows();
        blocks.emplace_back(mask.segment(like.offset(k), b).asDiagonal());
    }
    return BlockCovariance(std::move(blocks));
}

double unit_variance_prefactor(double kappa, double sigma_beta2, double h2, double trace_over_p)
{
    const double signal = kappa * sigma_beta2 * trace_over_p;
    return 1.0 / (signal + calibrate_noise(h2, kappa, sigma_beta2, trace_over_p));
}

double prefactor_of(const TheoryInputs& inp, double tr_sigma)
{
    if (inp.prefactor_mode == PrefactorMode::explicit_value)
    {
        return inp.prefactor;
    }
    return unit_variance_prefactor(inp.kappa, inp.sigma_beta2, inp.h2, tr_sigma / inp.p);
}

}  // namespace

double solve_tau(const Eigen::VectorXd& spectrum, double n, double theta)
{
    check_spectrum(spectrum, n, theta);
    // Safeguarded Newton on the bracket (0, 1].
    double lo = 0.0;
    double hi = 1.0;
    double tau = 1.0;
    double slope = 0.0;
    for (int iter = 0; iter < 200; ++iter)
    {
        const double f = tau_equation(spectrum, n, theta, tau, slope);
        if (f == 0.0)
        {
            lo = hi = tau;
            break;
        }
        (f > 0.0 ? lo : hi) = tau;
        double next = tau - f / slope;
        if (!(next > lo && next < hi))
        {
            next = 0.5 * (lo + hi);
        }
        if (std::abs(next - tau) <= 1e-16 * tau || hi - lo <= 1e-16 * hi)
        {
            tau = next;
            break;
        }
        tau = next;
    }
    const double residual
        = std::abs(1.0 / tau - 1.0 - (spectrum.array() / (tau * spectrum.array() + theta)).sum() / n);
    if (!(tau > 0.0 && tau <= 1.0) || !(residual < 1e-10 / tau))
    {
        std::ostringstream msg;
        msg << "tau fixed point did not converge (tau=" << tau << ", residual=" << residual << ")";
        fail(ErrorKind::numerical, msg.str());
    }
    return tau;
}

double compute_rho(const Eigen::VectorXd& spectrum, double n, double theta, double tau)
{
    check_spectrum(spectrum, n, theta);
    require(tau > 0.0, ErrorKind::validation, "tau must be positive");
    const Eigen::ArrayXd denom = tau * spectrum.array() + theta;
    const double T = tau * tau / n * (spectrum.array().square() / denom.square()).sum();
    if (!(T < 1.0))
    {
        fail(ErrorKind::numerical, "second-order fixed point unstable (T=" + std::to_string(T) + ")");
    }
    return T / (1.0 - T);
}

double identity_tau(double gamma, double theta)
{
    require(gamma > 0.0 && theta > 0.0, ErrorKind::validation, "gamma and theta must be positive");
    const double b = 1.0 - theta - gamma;
    return 0.5 * (b + std::sqrt(b * b + 4.0 * theta));
}

double identity_rho(double gamma, double theta)
{
    require(gamma > 0.0 && theta > 0.0, ErrorKind::validation, "gamma and theta must be positive");
    const double b = 1.0 - theta - gamma;
    const double root = std::sqrt(b * b + 4.0 * theta);
    return (1.0 + gamma + theta - root) / (2.0 * root);
}

SpectralState spectral_state(const Eigen::VectorXd& spectrum, double n, double theta)
{
    SpectralState state;
    state.tau = solve_tau(spectrum, n, theta);
    state.rho = compute_rho(spectrum, n, theta, state.tau);
    state.theta = theta;
    state.gamma = static_cast<double>(spectrum.size()) / n;
    return state;
}

RuleEquivalents ridge_equivalents(const BlockSpectrum& sigma, double n_w, double theta)
{
    const auto state = spectral_state(sigma.eigenvalues(), n_w, theta);
    const double tau = state.tau;
    const double rho = state.rho;
    return {
        sigma.map([&](double l) { return 1.0 / (tau * l + theta); }),
        sigma.map([&](double l) { return (rho + 1.0) * l / ((tau * l + theta) * (tau * l + theta)); }),
    };
}

RuleEquivalents ridge_equivalents_cross(
    const BlockSpectrum& sigma, const BlockCovariance& target, double n_w, double theta)
{
    require(target.dim() == sigma.dim(), ErrorKind::validation, "target covariance dimension mismatch");
    const Eigen::VectorXd& spectrum = sigma.eigenvalues();
    const double tau = solve_tau(spectrum, n_w, theta);
    const Eigen::ArrayXd denom = tau * spectrum.array() + theta;
    const double T = tau * tau / n_w * (spectrum.array().square() / denom.square()).sum();
    require(T < 1.0, ErrorKind::numerical, "second-order fixed point unstable");

    const BlockCovariance M = sigma.map([&](double l) { return 1.0 / (tau * l + theta); });
    const BlockCovariance MSM = sigma.map([&](double l) { return l / ((tau * l + theta) * (tau * l + theta)); });
    const BlockCovariance S = sigma.map([](double l) { return l; });
    const BlockCovariance MCM = M.product(target).product(M);
    const double coef = tau * tau / n_w * trace_product(S, MCM) / (1.0 - T);
    return {M, add(MCM, MSM, coef)};
}

RuleEquivalents threshold_equivalents(const std::vector<Eigen::Index>& selected, const BlockCovariance& sigma)
{
    BlockCovariance D = selector(selected, sigma);
    BlockCovariance E = D.product(sigma).product(D);
    return {std::move(D), std::move(E)};
}

TheoryTraces threshold_traces(const std::vector<Eigen::Index>& selected, const Eigen::MatrixXd& sigma)
{
    require(!selected.empty(), ErrorKind::validation, "selection is empty");
    require(sigma.rows() == sigma.cols(), ErrorKind::validation, "covariance must be square");
    for (const auto i : selected)
    {
        require(i >= 0 && i < sigma.rows(), ErrorKind::validation, "selection index out of range");
    }
    const Eigen::MatrixXd rows = sigma(selected, Eigen::all);
    const Eigen::MatrixXd sub = sigma(selected, selected);
    const Eigen::MatrixXd sub_sq = rows * rows.transpose();  // (Sigma^2) restricted
    TheoryTraces t;
    t.tr_sigma = sigma.trace();
    t.tr_D_sigma2 = rows.squaredNorm();
    t.tr_E_sigma = sub.squaredNorm();
    t.tr_E_sigma2 = (sub.array() * sub_sq.array()).sum();
    return t;
}

double trace_product(const BlockCovariance& a, const BlockCovariance& b)
{
    require(a.dim() == b.dim(), ErrorKind::validation, "trace_product: dimension mismatch");
    if (!a.same_partition(b))
    {
        return (a.dense().array() * b.dense().transpose().array()).sum();
    }
    double total = 0.0;
    for (std::size_t k = 0; k < a.block_count(); ++k)
    {
        total += (a.block(k).array() * b.block(k).transpose().array()).sum();
    }
    return total;
}

TheoryTraces traces_of(const RuleEquivalents& eq, const BlockCovariance& sigma)
{
    const BlockCovariance sigma2 = sigma.product(sigma);
    TheoryTraces t;
    t.tr_sigma = sigma.trace();
    t.tr_D_sigma2 = trace_product(eq.D, sigma2);
    t.tr_E_sigma = trace_product(eq.E, sigma);
    t.tr_E_sigma2 = trace_product(eq.E, sigma2);
    return t;
}

void validate(const TheoryInputs& inp)
{
    require(
        inp.n_train >= 1.0 && inp.n_valid >= 1.0 && inp.n_w >= 1.0 && inp.p >= 1.0,
        ErrorKind::validation,
        "theory inputs: counts must be >= 1");
    require(inp.h2 > 0.0 && inp.h2 <= 1.0, ErrorKind::validation, "theory inputs: h2 must lie in (0, 1]");
    require(inp.kappa >= 0.0 && inp.kappa <= 1.0, ErrorKind::validation, "theory inputs: kappa must lie in [0, 1]");
    require(inp.sigma_beta2 > 0.0, ErrorKind::validation, "theory inputs: sigma_beta2 must be > 0");
    if (inp.prefactor_mode == PrefactorMode::unit_variance)
    {
        require(inp.kappa > 0.0, ErrorKind::validation, "unit-variance prefactor needs kappa > 0");
    }
}

double theory_r2_from_traces(const TheoryInputs& inp, const TheoryTraces& t)
{
    validate(inp);
    const double denom = t.tr_sigma * t.tr_E_sigma / inp.h2 + inp.n_train * t.tr_E_sigma2;
    require(denom > 0.0 && std::isfinite(denom), ErrorKind::numerical, "theory R2: zero denominator");
    const double numer = inp.n_train / inp.p * inp.kappa * inp.sigma_beta2 * t.tr_D_sigma2 * t.tr_D_sigma2;
    return prefactor_of(inp, t.tr_sigma) * numer / denom;
}

double theory_r2_general(const TheoryInputs& inp, const BlockCovariance& sigma, const RuleEquivalents& eq)
{
    require(
        eq.D.dim() == sigma.dim() && eq.E.dim() == sigma.dim(),
        ErrorKind::validation,
        "equivalents dimension mismatch");
    return theory_r2_from_traces(inp, traces_of(eq, sigma));
}

double theory_r2_ridge(const TheoryInputs& inp, const Eigen::VectorXd& spectrum, double theta)
{
    const auto state = spectral_state(spectrum, inp.n_w, theta);
    const Eigen::ArrayXd l = spectrum.array();
    const Eigen::ArrayXd denom = state.tau * l + theta;
    TheoryTraces t;
    t.tr_sigma = l.sum();
    t.tr_D_sigma2 = (l.square() / denom).sum();
    t.tr_E_sigma = (state.rho + 1.0) * (l.square() / denom.square()).sum();
    t.tr_E_sigma2 = (state.rho + 1.0) * (l.cube() / denom.square()).sum();
    return theory_r2_from_traces(inp, t);
}

double identity_ridge_closed_form_r2(double theta, double gamma_w, double h2, double p, double n_train, double n_w)
{
    require(h2 > 0.0 && h2 <= 1.0, ErrorKind::validation, "h2 must lie in (0, 1]");
    const double tau = identity_tau(gamma_w, theta);
    const double rho = identity_rho(gamma_w, theta);
    return (theta + tau) / (rho + 1.0) * n_w / (p / h2 + n_train);
}

RuleEquivalents combine_ensemble(const std::vector<WeightedEquivalents>& components, const BlockCovariance& sigma)
{
    require(!components.empty(), ErrorKind::validation, "ensemble needs at least one component");
    for (const auto& c : components)
    {
        require(
            c.eq.D.dim() == sigma.dim() && c.eq.E.dim() == sigma.dim(),
            ErrorKind::validation,
            "ensemble equivalents dimension mismatch");
    }
    BlockCovariance D = scaled(components[0].eq.D, components[0].weight);
    BlockCovariance E = scaled(components[0].eq.E, components[0].weight * components[0].weight);
    for (std::size_t j = 1; j < components.size(); ++j)
    {
        D = add(D, components[j].eq.D, components[j].weight);
        E = add(E, components[j].eq.E, components[j].weight * components[j].weight);
    }
    for (std::size_t i = 0; i < components.size(); ++i)
    {
        for (std::size_t j = 0; j < components.size(); ++j)
        {
            if (i == j)
            {
                continue;
            }
            const double w = components[i].weight * components[j].weight;
            E = add(E, components[i].eq.D.product(sigma).product(components[j].eq.D), w);
        }
    }
    return {std::move(D), std::move(E)};
}

double theory_r2_ensemble(
    const TheoryInputs& inp, const BlockCovariance& sigma, const std::vector<WeightedEquivalents>& components)
{
    return theory_r2_general(inp, sigma, combine_ensemble(components, sigma));
}

namespace
{

void check_multi(const TheoryInputs& inp, const std::vector<PopulationTheory>& pops, const Eigen::MatrixXd& cross)
{
    require(!pops.empty(), ErrorKind::validation, "multi theory needs a population");
    const auto K = static_cast<Eigen::Index>(pops.size());
    require(cross.rows() == K && cross.cols() == K, ErrorKind::validation, "cross covariance must be K x K");
    for (const auto& pop : pops)
    {
        require(
            pop.sigma.dim() == pops[0].sigma.dim() && pop.eq.D.dim() == pop.sigma.dim()
                && pop.eq.E.dim() == pop.sigma.dim(),
            ErrorKind::validation,
            "multi theory: dimension mismatch");
        require(pop.h2 > 0.0 && pop.h2 <= 1.0, ErrorKind::validation, "multi theory: h2 must lie in (0, 1]");
    }
    require(inp.n_train >= 1.0 && inp.n_w >= 1.0 && inp.p >= 1.0, ErrorKind::validation, "multi theory: bad counts");
}

/// tr(Sigma_i D_i Sigma_1 D_j Sigma_j)
double cross_trace(const PopulationTheory& a, const BlockCovariance& target, const PopulationTheory& b)
{
    const BlockCovariance left = a.sigma.product(a.eq.D).product(target);
    return trace_product(left, b.eq.D.product(b.sigma));
}

/// Diagonal term of one population, scaled by n_w^2 / n_tr^2.
double own_term(const PopulationTheory& pop, double sjj, double n_train, double p)
{
    const BlockCovariance sigma2 = pop.sigma.product(pop.sigma);
    const double base = pop.kappa * sjj / p;
    return base / n_train / pop.h2 * pop.sigma.trace() * trace_product(pop.eq.E, pop.sigma)
           + base * trace_product(pop.eq.E, sigma2);
}

}  // namespace

MultiTheoryResult theory_r2_multi(
    const TheoryInputs& inp, const std::vector<PopulationTheory>& pops, const Eigen::MatrixXd& cross)
{
    check_multi(inp, pops, cross);
    const double ratio = inp.n_train / inp.n_w;
    const double p = inp.p;
    const auto& target = pops[0];
    const BlockCovariance& sigma1 = target.sigma;

    MultiTheoryResult out;
    out.lambda1 = target.weight * ratio * target.kappa * cross(0, 0) / p
                  * trace_product(target.eq.D, sigma1.product(sigma1));
    for (std::size_t j = 1; j < pops.size(); ++j)
    {
        const auto jj = static_cast<Eigen::Index>(j);
        out.lambda1 += pops[j].weight * ratio * target.kappa * pops[j].kappa * cross(0, jj) / p
                       * trace_product(sigma1, pops[j].eq.D.product(pops[j].sigma));
    }
    for (std::size_t i = 0; i < pops.size(); ++i)
    {
        const auto ii = static_cast<Eigen::Index>(i);
        for (std::size_t j = i + 1; j < pops.size(); ++j)
        {
            const auto jj = static_cast<Eigen::Index>(j);
            out.lambda2 += 2.0 * pops[i].weight * pops[j].weight * ratio * ratio * pops[i].kappa * pops[j].kappa
                           * cross(ii, jj) / p * cross_trace(pops[i], sigma1, pops[j]);
        }
        out.lambda2 += pops[i].weight * pops[i].weight * ratio * ratio
                       * own_term(pops[i], cross(ii, ii), inp.n_train, p);
    }
    require(out.lambda2 > 0.0 && std::isfinite(out.lambda2), ErrorKind::numerical, "multi theory: zero denominator");

    double prefactor = inp.prefactor;
    if (inp.prefactor_mode == PrefactorMode::unit_variance)
    {
        prefactor = unit_variance_prefactor(target.kappa, cross(0, 0), target.h2, sigma1.trace() / p);
    }
    out.r2 = prefactor * out.lambda1 * out.lambda1 / out.lambda2;
    return out;
}

TwoPopTerms two_population_terms(
    const TheoryInputs& inp, const std::vector<PopulationTheory>& pops, const Eigen::MatrixXd& cross)
{
    check_multi(inp, pops, cross);
    require(pops.size() == 2, ErrorKind::validation, "two-population terms need K = 2");
    const double p = inp.p;
    const auto& a = pops[0];
    const auto& b = pops[1];
    const BlockCovariance& sigma1 = a.sigma;
    TwoPopTerms t;
    t.N1 = a.kappa * cross(0, 0) / p * trace_product(a.eq.D, sigma1.product(sigma1));
    t.N2 = a.kappa * b.kappa * cross(0, 1) / p * trace_product(sigma1, b.eq.D.product(b.sigma));
    t.D1 = own_term(a, cross(0, 0), inp.n_train, p);
    t.D2 = own_term(b, cross(1, 1), inp.n_train, p);
    t.D3 = a.kappa * b.kappa * cross(0, 1) / p * cross_trace(a, sigma1, b);
    return t;
}

double trace_second_moment_rhs(const Eigen::MatrixXd& C, const Eigen::MatrixXd& sigma, double n)
{
    require(
        C.rows() == C.cols() && sigma.rows() == sigma.cols() && C.rows() == sigma.rows(),
        ErrorKind::validation,
        "trace_second_moment_rhs: dimension mismatch");
    require(n > 0.0, ErrorKind::validation, "trace_second_moment_rhs: n must be positive");
    const auto p = static_cast<double>(C.rows());
    const double tr_c_sigma = (C.array() * sigma.transpose().array()).sum();
    const Eigen::MatrixXd sigma2 = sigma * sigma;
    const double tr_c_sigma2 = (C.array() * sigma2.transpose().array()).sum();
    return sigma.trace() / n * tr_c_sigma / p + tr_c_sigma2 / p;
}

}  // namespace sumtrain
