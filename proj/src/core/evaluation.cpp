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

#include "sumtrain/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sumtrain/error.hpp"

namespace sumtrain
{

namespace
{

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double value_or_nan(const std::optional<double>& v)
{
    return v ? *v : kNaN;
}

}  // namespace

void validate(const R2Inputs& inp, Eigen::Index p)
{
    require(inp.sigma != nullptr, ErrorKind::config, "R2 inputs need a covariance");
    require(inp.sigma->dim() == p, ErrorKind::validation, "R2 covariance dimension mismatch");
    require(inp.n_valid >= 1, ErrorKind::validation, "R2 inputs need n_valid >= 1");
    require(
        inp.y_norm2_valid > 0.0 && std::isfinite(inp.y_norm2_valid),
        ErrorKind::validation,
        "R2 inputs need |y_valid|^2 > 0");
}

std::optional<double> r2_summary(
    const Eigen::VectorXd& s_valid, const Eigen::VectorXd& beta_hat, const R2Inputs& inp)
{
    require(s_valid.size() == beta_hat.size(), ErrorKind::validation, "R2: dimension mismatch");
    validate(inp, beta_hat.size());
    const double quad = inp.sigma->quadratic_form(beta_hat);
    if (!(quad > 0.0) || !std::isfinite(quad))
    {
        return std::nullopt;
    }
    const double inner = s_valid.dot(beta_hat);
    return inner * inner / (static_cast<double>(inp.n_valid) * quad * inp.y_norm2_valid);
}

std::optional<double> r2_pseudo(const PseudoSplit& split, const Eigen::VectorXd& beta_hat, const R2Inputs& inp)
{
    return r2_summary(split.s_valid, beta_hat, inp);
}

std::optional<double> r2_individual(
    const IndividualSplit& split, const Eigen::VectorXd& beta_hat, const R2Inputs& inp)
{
    return r2_summary(split.X_valid.transpose() * split.y_valid, beta_hat, inp);
}

std::optional<double> r2_holdout(
    const Eigen::MatrixXd& X_test, const Eigen::VectorXd& y_test, const Eigen::VectorXd& beta_hat)
{
    require(X_test.rows() >= 1, ErrorKind::validation, "holdout set is empty");
    require(
        X_test.rows() == y_test.size() && X_test.cols() == beta_hat.size(),
        ErrorKind::validation,
        "holdout: dimension mismatch");
    const Eigen::VectorXd pred = X_test * beta_hat;
    const Eigen::ArrayXd a = pred.array() - pred.mean();
    const Eigen::ArrayXd b = y_test.array() - y_test.mean();
    const double saa = a.square().sum();
    const double sbb = b.square().sum();
    if (!(saa > 0.0) || !(sbb > 0.0))
    {
        return std::nullopt;
    }
    const double sab = (a * b).sum();
    return sab * sab / (saa * sbb);
}

double surrogate_y_norm2(const SummaryStats& stats, Eigen::Index n_valid)
{
    require(stats.y_norm2.has_value(), ErrorKind::config, "summary statistics lack y_norm2");
    return static_cast<double>(n_valid) * *stats.y_norm2 / static_cast<double>(stats.n);
}

TuneResult select_best(std::vector<double> grid, std::vector<double> curve)
{
    require(!curve.empty(), ErrorKind::validation, "tuning grid is empty");
    require(grid.size() == curve.size(), ErrorKind::validation, "grid and curve lengths differ");
    TuneResult result;
    bool found = false;
    for (std::size_t i = 0; i < curve.size(); ++i)
    {
        if (std::isnan(curve[i]))
        {
            continue;
        }
        const double best = result.best_value;
        if (!found || curve[i] > best + 1e-12 * std::abs(best))
        {
            result.best_index = i;
            result.best_value = curve[i];
            found = true;
        }
    }
    require(found, ErrorKind::numerical, "every grid point is degenerate");
    result.grid = std::move(grid);
    result.curve = std::move(curve);
    return result;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count)
{
    require(lo > 0.0 && hi >= lo, ErrorKind::validation, "log grid needs 0 < lo <= hi");
    require(count >= 1, ErrorKind::validation, "log grid needs at least one point");
    if (count == 1)
    {
        return {lo};
    }
    std::vector<double> grid(count);
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t i = 0; i < count; ++i)
    {
        grid[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    return grid;
}

std::vector<double> default_theta_grid()
{
    return log_grid(1e-3, 1e2, 25);
}

ValidationContext ValidationContext::from_pseudo(const PseudoSplit& split, const R2Inputs& inp)
{
    return {split.s_train, split.s_valid, inp};
}

ValidationContext ValidationContext::from_individual(const IndividualSplit& split, const BlockCovariance& sigma)
{
    ValidationContext ctx;
    ctx.s_train = split.X_train.transpose() * split.y_train;
    ctx.s_valid = split.X_valid.transpose() * split.y_valid;
    ctx.inputs.sigma = &sigma;
    ctx.inputs.n_valid = split.X_valid.rows();
    ctx.inputs.y_norm2_valid = split.y_valid.squaredNorm();
    return ctx;
}

std::optional<double> ValidationContext::evaluate(const Eigen::VectorXd& beta_hat) const
{
    return r2_summary(s_valid, beta_hat, inputs);
}

TuneResult tune_theta(const RidgeSolver& solver, const std::vector<double>& grid, const ValidationContext& ctx)
{
    require(!grid.empty(), ErrorKind::validation, "theta grid is empty");
    const Eigen::VectorXd projected = solver.project(ctx.s_train);
    std::vector<double> curve;
    curve.reserve(grid.size());
    for (const double theta : grid)
    {
        curve.push_back(value_or_nan(ctx.evaluate(solver.solve(ctx.s_train, projected, theta))));
    }
    return select_best(grid, std::move(curve));
}

TuneResult tune_threshold(
    const std::vector<Eigen::Index>& ks, const Eigen::VectorXd& g_diag, const ValidationContext& ctx)
{
    require(!ks.empty(), ErrorKind::validation, "top-k grid is empty");
    const auto ranking = marginal_ranking(ctx.s_train, g_diag);
    std::vector<double> grid;
    std::vector<double> curve;
    for (const auto k : ks)
    {
        grid.push_back(static_cast<double>(k));
        curve.push_back(value_or_nan(ctx.evaluate(threshold_fit(ctx.s_train, top_k(ranking, k)))));
    }
    return select_best(std::move(grid), std::move(curve));
}

std::vector<std::vector<double>> simplex_grid(std::size_t k, double step)
{
    require(k >= 1, ErrorKind::validation, "simplex needs at least one component");
    require(step > 0.0 && step <= 1.0, ErrorKind::validation, "simplex step must lie in (0, 1]");
    const auto m = static_cast<long>(std::lround(1.0 / step));
    require(
        std::abs(static_cast<double>(m) * step - 1.0) < 1e-9,
        ErrorKind::validation,
        "simplex step must divide 1");

    std::vector<std::vector<double>> points;
    std::vector<long> counts(k, 0);
    // Depth-first enumeration with the first coordinate descending.
    std::function<void(std::size_t, long)> recurse = [&](std::size_t index, long remaining) {
        if (index + 1 == k)
        {
            counts[index] = remaining;
            std::vector<double> point(k);
            for (std::size_t j = 0; j < k; ++j)
            {
                point[j] = static_cast<double>(counts[j]) / static_cast<double>(m);
            }
            points.push_back(std::move(point));
            return;
        }
        for (long c = remaining; c >= 0; --c)
        {
            counts[index] = c;
            recurse(index + 1, remaining - c);
        }
    };
    recurse(0, m);
    return points;
}

EnsembleTuneResult tune_ensemble(
    const std::vector<ComponentFamily>& families, const ValidationContext& ctx, double step)
{
    require(!families.empty(), ErrorKind::validation, "ensemble search space is empty");
    EnsembleTuneResult result;
    std::vector<Eigen::VectorXd> fits;
    for (const auto& family : families)
    {
        require(!family.grid.empty(), ErrorKind::validation, "component grid is empty: " + family.name);
        std::vector<Eigen::VectorXd> candidates;
        std::vector<double> curve;
        for (const double h : family.grid)
        {
            candidates.push_back(family.fit(h));
            curve.push_back(value_or_nan(ctx.evaluate(candidates.back())));
        }
        auto tuned = select_best(family.grid, std::move(curve));
        Eigen::VectorXd best = std::move(candidates[tuned.best_index]);
        const double norm2 = ctx.inputs.sigma->quadratic_form(best);
        if (norm2 > 0.0)
        {
            best /= std::sqrt(norm2);
        }
        fits.push_back(std::move(best));
        result.components.push_back(std::move(tuned));
    }

    result.weight_grid = simplex_grid(families.size(), step);
    std::vector<double> index_grid;
    for (const auto& w : result.weight_grid)
    {
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(ctx.s_train.size());
        for (std::size_t j = 0; j < fits.size(); ++j)
        {
            beta += w[j] * fits[j];
        }
        index_grid.push_back(static_cast<double>(index_grid.size()));
        result.curve.push_back(value_or_nan(ctx.evaluate(beta)));
    }
    const auto best = select_best(std::move(index_grid), result.curve);
    result.best_index = best.best_index;
    result.best_value = best.best_value;
    result.weights = result.weight_grid[best.best_index];
    result.beta = Eigen::VectorXd::Zero(ctx.s_train.size());
    for (std::size_t j = 0; j < fits.size(); ++j)
    {
        result.beta += result.weights[j] * fits[j];
    }
    return result;
}

double two_pop_objective(double omega1, double N1, double N2, double D1, double D2, double D3)
{
    const double w2 = 1.0 - omega1;
    const double num = omega1 * N1 + w2 * N2;
    const double den = omega1 * omega1 * D1 + w2 * w2 * D2 + 2.0 * omega1 * w2 * D3;
    return num * num / den;
}

TwoPopWeights optimal_two_pop_weights(double N1, double N2, double D1, double D2, double D3)
{
    require(D1 > 0.0 && D2 > 0.0, ErrorKind::validation, "optimal weights need D1, D2 > 0");
    const double num = D2 * N1 - D3 * N2;
    const double den = D2 * N1 - D3 * N1 + D1 * N2 - D3 * N2;
    if (den == 0.0 || !std::isfinite(num / den))
    {
        fail(
            ErrorKind::numerical,
            "optimal weights: zero denominator (N1=" + std::to_string(N1) + ", N2=" + std::to_string(N2)
                + ", D3=" + std::to_string(D3) + ")");
    }
    const double r = num / den;
    if (r >= 0.0 && r <= 1.0)
    {
        return {r, 1.0 - r};
    }
    // The objective is unimodal between its zero and r on the projective
    // line, so outside [0, 1] the better endpoint wins.
    const double w = two_pop_objective(1.0, N1, N2, D1, D2, D3) >= two_pop_objective(0.0, N1, N2, D1, D2, D3) ? 1.0 : 0.0;
    return {w, 1.0 - w};
}

}  // namespace sumtrain
