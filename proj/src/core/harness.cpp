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

#include "sumtrain/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "sumtrain/error.hpp"
#include "sumtrain/estimators.hpp"
#include "sumtrain/evaluation.hpp"
#include "sumtrain/rmt.hpp"

namespace sumtrain
{

namespace
{

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Substream indices within one replicate.
constexpr std::uint64_t kDataStream = 0;
constexpr std::uint64_t kPseudoStream = 1;
constexpr std::uint64_t kIndividualStream = 2;
constexpr std::uint64_t kTestStream = 3;

std::string fmt(double value)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

double pairwise_sum(const double* data, std::size_t n)
{
    if (n <= 8)
    {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            total += data[i];
        }
        return total;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

double value_or_nan(const std::optional<double>& v)
{
    return v ? *v : kNaN;
}

std::string join(const std::vector<std::string>& messages)
{
    std::string out;
    for (const auto& m : messages)
    {
        out += (out.empty() ? "" : "; ") + m;
    }
    return out;
}

XtYCovariance make_resampler(
    const ResamplerConfig& cfg, const SummaryStats& stats, const BlockCovariance& sigma, const Dataset& data)
{
    switch (cfg.mode)
    {
        case ResamplerMode::oracle:
            return XtYCovariance::oracle(stats, sigma, data.beta);
        case ResamplerMode::expected:
            return XtYCovariance::expected(stats.n, sigma, data.beta, data.sigma_eps2);
        case ResamplerMode::plugin:
            return XtYCovariance::plugin_factor(
                stats.y_norm2.value_or(0.0) / static_cast<double>(data.W.rows()), data.W);
    }
    fail(ErrorKind::config, "unknown resampler mode");
}

/// Test rows drawn from the replicate's model.
struct TestSet
{
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
};

TestSet draw_test_set(Eigen::Index rows, const BlockCovariance& root, const Dataset& data, Rng& rng)
{
    TestSet test;
    test.X = sample_design(rows, root, rng);
    test.y = test.X * data.beta + std::sqrt(data.sigma_eps2) * standard_normal_vector(rows, rng);
    return test;
}

/// Tuned curve and the fit at its optimum.
struct TunedFit
{
    std::vector<double> curve;
    std::size_t best = 0;
    Eigen::VectorXd beta;
};

TunedFit tune_ridge(const RidgeSolver& solver, const std::vector<double>& grid, const ValidationContext& ctx)
{
    auto tuned = tune_theta(solver, grid, ctx);
    return {std::move(tuned.curve), tuned.best_index, solver.solve(ctx.s_train, grid[tuned.best_index])};
}

TunedFit tune_top_k(
    const std::vector<Eigen::Index>& ks, const Eigen::VectorXd& g_diag, const ValidationContext& ctx)
{
    auto tuned = tune_threshold(ks, g_diag, ctx);
    const auto ranking = marginal_ranking(ctx.s_train, g_diag);
    return {std::move(tuned.curve), tuned.best_index,
            threshold_fit(ctx.s_train, top_k(ranking, ks[tuned.best_index]))};
}

std::vector<double> theta_grid_of(const EstimatorConfig& est)
{
    return est.theta_grid.empty() ? default_theta_grid() : est.theta_grid;
}

std::vector<Eigen::Index> k_grid_of(const EstimatorConfig& est, Eigen::Index p)
{
    return est.k_grid.empty() ? default_k_grid(p) : est.k_grid;
}

void require_valid(const ExperimentConfig& cfg)
{
    const auto errors = validate(cfg);
    require(errors.empty(), ErrorKind::config, "invalid experiment: " + join(errors));
}

/// Rescales p, n_w and the number of AR(1) blocks with n, keeping the
/// block size fixed.
GenConfig scaled_to(const GenConfig& base, Eigen::Index n)
{
    GenConfig g = base;
    const double scale = static_cast<double>(n) / static_cast<double>(base.n);
    g.n = n;
    g.p = std::max<Eigen::Index>(1, std::llround(static_cast<double>(base.p) * scale));
    g.n_w = std::max<Eigen::Index>(1, std::llround(static_cast<double>(base.n_w) * scale));
    g.cov.p = g.p;
    if (g.cov.kind == CovarianceKind::block_ar1)
    {
        const Eigen::Index block = base.p / base.cov.n_block;
        require(g.p % block == 0, ErrorKind::config, "scaled p is not a multiple of the AR(1) block size");
        g.cov.n_block = g.p / block;
    }
    require(g.cov.kind != CovarianceKind::dense, ErrorKind::config, "dense covariance cannot be rescaled");
    return g;
}

GenConfig with_p(const GenConfig& base, Eigen::Index p)
{
    GenConfig g = base;
    g.p = p;
    g.cov.p = p;
    if (g.cov.kind == CovarianceKind::block_ar1)
    {
        const Eigen::Index block = base.p / base.cov.n_block;
        require(p % block == 0, ErrorKind::config, "p is not a multiple of the AR(1) block size");
        g.cov.n_block = p / block;
    }
    require(g.cov.kind != CovarianceKind::dense || p == base.p, ErrorKind::config, "dense covariance cannot be resized");
    return g;
}

}  // namespace

std::vector<std::string> validate(const ExperimentConfig& cfg)
{
    std::vector<std::string> errors;
    for (auto& e : validate(cfg.gen))
    {
        errors.push_back("data: " + e);
    }
    if (cfg.replicates < 1)
    {
        errors.emplace_back("replicates must be >= 1");
    }
    if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0))
    {
        errors.emplace_back("split_ratio must lie in (0, 1)");
    }
    if (!cfg.modes.pseudo && !cfg.modes.individual && !cfg.modes.theory && !cfg.modes.holdout)
    {
        errors.emplace_back("at least one evaluator mode is required");
    }
    if (!cfg.estimator.ridge && !cfg.estimator.threshold)
    {
        errors.emplace_back("at least one estimator family is required");
    }
    for (const double t : cfg.estimator.theta_grid)
    {
        if (!(t > 0.0) || !std::isfinite(t))
        {
            errors.emplace_back("theta_grid values must be positive");
            break;
        }
    }
    for (const auto k : cfg.estimator.k_grid)
    {
        if (k < 1 || k > cfg.gen.p)
        {
            errors.emplace_back("k_grid values must lie in [1, p]");
            break;
        }
    }
    if (cfg.modes.holdout && cfg.n_test < 2)
    {
        errors.emplace_back("n_test must be >= 2 for hold-out evaluation");
    }
    return errors;
}

std::vector<Eigen::Index> default_k_grid(Eigen::Index p)
{
    std::vector<Eigen::Index> ks;
    for (const double v : log_grid(1.0, static_cast<double>(p), std::min<std::size_t>(25, static_cast<std::size_t>(p))))
    {
        const auto k = std::clamp<Eigen::Index>(std::llround(v), 1, p);
        if (ks.empty() || k > ks.back())
        {
            ks.push_back(k);
        }
    }
    return ks;
}

MeanSE mean_se(const std::vector<double>& values)
{
    std::vector<double> finite;
    finite.reserve(values.size());
    MeanSE out;
    for (const double v : values)
    {
        if (std::isnan(v))
        {
            ++out.degenerate;
        }
        else
        {
            finite.push_back(v);
        }
    }
    out.count = static_cast<int>(finite.size());
    if (finite.empty())
    {
        out.mean = kNaN;
        out.se = kNaN;
        return out;
    }
    const auto n = static_cast<double>(finite.size());
    out.mean = pairwise_sum(finite.data(), finite.size()) / n;
    if (finite.size() > 1)
    {
        std::vector<double> sq(finite.size());
        for (std::size_t i = 0; i < finite.size(); ++i)
        {
            sq[i] = (finite[i] - out.mean) * (finite[i] - out.mean);
        }
        out.se = std::sqrt(pairwise_sum(sq.data(), sq.size()) / (n - 1.0) / n);
    }
    return out;
}

unsigned worker_count(std::size_t tasks)
{
    unsigned workers = std::max(1U, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SUMTRAIN_THREADS"))
    {
        const long requested = std::strtol(env, nullptr, 10);
        if (requested >= 1)
        {
            workers = static_cast<unsigned>(requested);
        }
    }
    return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(workers, tasks)));
}

void parallel_for(std::size_t count, std::uint64_t master_seed, const std::function<void(std::size_t)>& body)
{
    std::vector<std::exception_ptr> failures(count);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    auto worker = [&] {
        for (std::size_t i = next++; i < count && !stop; i = next++)
        {
            try
            {
                body(i);
            }
            catch (...)
            {
                failures[i] = std::current_exception();
                stop = true;
            }
        }
    };
    const unsigned workers = worker_count(count);
    if (workers <= 1)
    {
        worker();
    }
    else
    {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t)
        {
            pool.emplace_back(worker);
        }
        for (auto& th : pool)
        {
            th.join();
        }
    }
    for (std::size_t i = 0; i < count; ++i)
    {
        if (!failures[i])
        {
            continue;
        }
        const std::string where = "replicate " + std::to_string(i) + " (seed "
                                  + std::to_string(derive_seed(master_seed, i)) + "): ";
        try
        {
            std::rethrow_exception(failures[i]);
        }
        catch (const Error& e)
        {
            throw Error(e.kind(), where + e.what());
        }
        catch (const std::exception& e)
        {
            throw Error(ErrorKind::numerical, where + e.what());
        }
    }
}

SweepResult run_sweep(const ExperimentConfig& cfg)
{
    require_valid(cfg);
    const GenConfig& gen = cfg.gen;
    const BlockCovariance sigma = make_covariance(gen.cov);
    const BlockCovariance root = matrix_sqrt_psd(sigma);
    const auto R = static_cast<std::size_t>(cfg.replicates);

    SweepResult result;
    result.replicates = cfg.replicates;
    result.seed = cfg.seed;
    if (cfg.estimator.ridge)
    {
        CurveSet c;
        c.family = "ridge";
        c.grid = theta_grid_of(cfg.estimator);
        c.theory.assign(c.grid.size(), kNaN);
        if (cfg.modes.theory)
        {
            const Eigen::VectorXd spectrum = BlockSpectrum(sigma).eigenvalues();
            TheoryInputs inp;
            inp.n_train = static_cast<double>(train_size(gen.n, cfg.split_ratio));
            inp.n_valid = static_cast<double>(gen.n) - inp.n_train;
            inp.n_w = static_cast<double>(gen.n_w);
            inp.p = static_cast<double>(gen.p);
            inp.kappa = gen.kappa;
            inp.sigma_beta2 = gen.sigma_beta2;
            inp.h2 = gen.target_h2;
            for (std::size_t g = 0; g < c.grid.size(); ++g)
            {
                c.theory[g] = theory_r2_ridge(inp, spectrum, c.grid[g]);
            }
        }
        result.curves.push_back(std::move(c));
    }
    if (cfg.estimator.threshold)
    {
        CurveSet c;
        c.family = "threshold";
        for (const auto k : k_grid_of(cfg.estimator, gen.p))
        {
            c.grid.push_back(static_cast<double>(k));
        }
        c.theory.assign(c.grid.size(), kNaN);
        result.curves.push_back(std::move(c));
    }
    for (auto& c : result.curves)
    {
        c.pseudo.assign(R, std::vector<double>(c.grid.size(), kNaN));
        c.individual.assign(R, std::vector<double>(c.grid.size(), kNaN));
        c.pseudo_best.assign(R, 0);
        c.individual_best.assign(R, 0);
        c.holdout_pseudo.assign(R, kNaN);
        c.holdout_individual.assign(R, kNaN);
    }
    const std::vector<Eigen::Index> ks = k_grid_of(cfg.estimator, gen.p);
    const bool need_empirical = cfg.modes.pseudo || cfg.modes.individual || cfg.modes.holdout;
    if (!need_empirical)
    {
        return result;
    }

    parallel_for(R, cfg.seed, [&](std::size_t r) {
        const std::uint64_t rep_seed = derive_seed(cfg.seed, r);
        Rng data_rng = substream(rep_seed, kDataStream);
        const Dataset data = generate_dataset(gen, data_rng);
        const SummaryStats stats = compute_summary(data.X, data.y);
        const RidgeSolver solver = RidgeSolver::from_panel(data.W);
        const Eigen::VectorXd& g_diag = solver.gram_diagonal();

        std::optional<ValidationContext> pseudo;
        if (cfg.modes.pseudo || cfg.modes.holdout)
        {
            Rng rng = substream(rep_seed, kPseudoStream);
            const auto cov = make_resampler(cfg.resampler, stats, sigma, data);
            const auto split = pseudo_split(stats, cov, cfg.split_ratio, rng, cfg.resampler.noise);
            const R2Inputs inp{&sigma, split.n_valid, surrogate_y_norm2(stats, split.n_valid)};
            pseudo = ValidationContext::from_pseudo(split, inp);
        }
        std::optional<ValidationContext> individual;
        if (cfg.modes.individual || cfg.modes.holdout)
        {
            Rng rng = substream(rep_seed, kIndividualStream);
            individual = ValidationContext::from_individual(
                individual_split(data.X, data.y, cfg.split_ratio, rng), sigma);
        }
        std::optional<TestSet> test;
        if (cfg.modes.holdout)
        {
            Rng rng = substream(rep_seed, kTestStream);
            test = draw_test_set(cfg.n_test, root, data, rng);
        }

        for (auto& c : result.curves)
        {
            auto run = [&](const ValidationContext& ctx) {
                return c.family == "ridge" ? tune_ridge(solver, c.grid, ctx) : tune_top_k(ks, g_diag, ctx);
            };
            if (pseudo)
            {
                auto tuned = run(*pseudo);
                c.pseudo[r] = std::move(tuned.curve);
                c.pseudo_best[r] = tuned.best;
                if (test)
                {
                    c.holdout_pseudo[r] = value_or_nan(r2_holdout(test->X, test->y, tuned.beta));
                }
            }
            if (individual)
            {
                auto tuned = run(*individual);
                c.individual[r] = std::move(tuned.curve);
                c.individual_best[r] = tuned.best;
                if (test)
                {
                    c.holdout_individual[r] = value_or_nan(r2_holdout(test->X, test->y, tuned.beta));
                }
            }
        }
    });
    return result;
}

std::vector<ResultRow> SweepResult::rows(const std::string& setting_id) const
{
    std::vector<ResultRow> out;
    for (const auto& c : curves)
    {
        const std::string setting = setting_id + "/" + c.family;
        const auto R = c.pseudo.size();
        for (std::size_t g = 0; g < c.grid.size(); ++g)
        {
            std::vector<double> sum(R);
            std::vector<double> ind(R);
            for (std::size_t r = 0; r < R; ++r)
            {
                sum[r] = c.pseudo[r][g];
                ind[r] = c.individual[r][g];
            }
            const auto ms = mean_se(sum);
            const auto mi = mean_se(ind);
            if (ms.count > 0)
            {
                out.push_back({setting, fmt(c.grid[g]), "sum", ms.mean, ms.se, ms.count, seed});
            }
            if (mi.count > 0)
            {
                out.push_back({setting, fmt(c.grid[g]), "ind", mi.mean, mi.se, mi.count, seed});
            }
            if (!std::isnan(c.theory[g]))
            {
                out.push_back({setting, fmt(c.grid[g]), "theory", c.theory[g], 0.0, 0, seed});
            }
        }
        const auto hs = mean_se(c.holdout_pseudo);
        const auto hi = mean_se(c.holdout_individual);
        if (hs.count > 0)
        {
            out.push_back({setting, "tuned", "holdout_sum", hs.mean, hs.se, hs.count, seed});
        }
        if (hi.count > 0)
        {
            out.push_back({setting, "tuned", "holdout_ind", hi.mean, hi.se, hi.count, seed});
        }
    }
    return out;
}

ParityResult run_parity(const ParityConfig& cfg)
{
    const auto pick = [](const auto& values, auto fallback) {
        return values.empty() ? std::vector<decltype(fallback)>{fallback} : values;
    };
    const auto h2s = pick(cfg.h2_values, cfg.base.gen.target_h2);
    const auto ps = pick(cfg.p_values, cfg.base.gen.p);
    const auto kappas = pick(cfg.kappa_values, cfg.base.gen.kappa);

    ParityResult result;
    result.replicates = cfg.base.replicates;
    result.seed = cfg.base.seed;
    std::uint64_t index = 0;
    for (const double h2 : h2s)
    {
        for (const auto p : ps)
        {
            for (const double kappa : kappas)
            {
                ExperimentConfig exp = cfg.base;
                exp.gen = with_p(cfg.base.gen, p);
                exp.gen.target_h2 = h2;
                exp.gen.kappa = kappa;
                exp.estimator.ridge = true;
                exp.estimator.threshold = false;
                exp.modes = {false, false, false, true};
                exp.seed = derive_seed(cfg.base.seed, index++);
                const auto sweep = run_sweep(exp);
                const auto& c = sweep.curves.front();

                ParitySetting s;
                s.id = "h2=" + fmt(h2) + ";p=" + std::to_string(p) + ";kappa=" + fmt(kappa);
                s.h2 = h2;
                s.p = p;
                s.kappa = kappa;
                s.holdout_pseudo = mean_se(c.holdout_pseudo);
                s.holdout_individual = mean_se(c.holdout_individual);
                std::vector<double> diff(c.holdout_pseudo.size());
                for (std::size_t r = 0; r < diff.size(); ++r)
                {
                    diff[r] = c.holdout_pseudo[r] - c.holdout_individual[r];
                }
                s.difference = mean_se(diff);
                result.settings.push_back(std::move(s));
            }
        }
    }
    return result;
}

std::vector<ResultRow> ParityResult::rows() const
{
    std::vector<ResultRow> out;
    for (const auto& s : settings)
    {
        out.push_back({s.id, "tuned", "holdout_sum", s.holdout_pseudo.mean, s.holdout_pseudo.se,
                       s.holdout_pseudo.count, seed});
        out.push_back({s.id, "tuned", "holdout_ind", s.holdout_individual.mean, s.holdout_individual.se,
                       s.holdout_individual.count, seed});
        out.push_back({s.id, "tuned", "holdout_diff", s.difference.mean, s.difference.se, s.difference.count, seed});
    }
    return out;
}

RatioResult run_ratio_convergence(const RatioConfig& cfg)
{
    require(!cfg.n_values.empty(), ErrorKind::config, "ratio study needs at least one n");
    require(!cfg.thetas.empty(), ErrorKind::config, "ratio study needs at least one theta");
    RatioResult result;
    result.replicates = cfg.base.replicates;
    result.seed = cfg.base.seed;
    for (std::size_t i = 0; i < cfg.n_values.size(); ++i)
    {
        ExperimentConfig exp = cfg.base;
        exp.gen = scaled_to(cfg.base.gen, cfg.n_values[i]);
        exp.estimator.ridge = true;
        exp.estimator.threshold = false;
        exp.estimator.theta_grid = cfg.thetas;
        exp.modes = {true, true, false, false};
        exp.seed = derive_seed(cfg.base.seed, i);
        const auto sweep = run_sweep(exp);
        const auto& c = sweep.curves.front();
        for (std::size_t g = 0; g < c.grid.size(); ++g)
        {
            std::vector<double> ratios(c.pseudo.size());
            for (std::size_t r = 0; r < ratios.size(); ++r)
            {
                const double den = c.individual[r][g];
                ratios[r] = den > 0.0 ? c.pseudo[r][g] / den : kNaN;
            }
            result.points.push_back({cfg.n_values[i], c.grid[g], mean_se(ratios)});
        }
    }
    return result;
}

std::vector<ResultRow> RatioResult::rows() const
{
    std::vector<ResultRow> out;
    for (const auto& pt : points)
    {
        const std::string id = "n=" + std::to_string(pt.n);
        out.push_back({id, fmt(pt.theta), "ratio", pt.ratio.mean, pt.ratio.se, pt.ratio.count, seed});
        if (pt.ratio.degenerate > 0)
        {
            out.push_back({id, fmt(pt.theta), "degenerate", static_cast<double>(pt.ratio.degenerate), 0.0,
                           pt.ratio.count + pt.ratio.degenerate, seed});
        }
    }
    return out;
}

double RatioResult::deviation(Eigen::Index n) const
{
    double worst = kNaN;
    for (const auto& pt : points)
    {
        if (pt.n == n)
        {
            const double d = std::abs(pt.ratio.mean - 1.0);
            worst = std::isnan(worst) ? d : std::max(worst, d);
        }
    }
    return worst;
}

std::vector<std::string> validate(const MultiExperimentConfig& cfg)
{
    std::vector<std::string> errors = validate(cfg.data);
    if (cfg.data.K() != 2)
    {
        errors.emplace_back("the weight study needs exactly 2 populations");
    }
    if (cfg.thetas.size() != cfg.data.K())
    {
        errors.emplace_back("one ridge theta per population is required");
    }
    for (const double t : cfg.thetas)
    {
        if (!(t > 0.0))
        {
            errors.emplace_back("ridge thetas must be positive");
            break;
        }
    }
    if (!(cfg.weight_step > 0.0 && cfg.weight_step <= 1.0))
    {
        errors.emplace_back("weight_step must lie in (0, 1]");
    }
    if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0))
    {
        errors.emplace_back("split_ratio must lie in (0, 1)");
    }
    if (cfg.replicates < 1)
    {
        errors.emplace_back("replicates must be >= 1");
    }
    return errors;
}

MultiResult run_multi_experiment(const MultiExperimentConfig& cfg)
{
    const auto errors = validate(cfg);
    require(errors.empty(), ErrorKind::config, "invalid multi-ancestry experiment: " + join(errors));
    const auto& data_cfg = cfg.data;
    const std::size_t K = data_cfg.K();

    std::vector<BlockCovariance> sigmas;
    for (const auto& pop : data_cfg.populations)
    {
        sigmas.push_back(make_covariance(pop.cov));
    }

    MultiResult result;
    result.replicates = cfg.replicates;
    result.seed = cfg.seed;
    const auto steps = static_cast<long>(std::lround(1.0 / cfg.weight_step));
    for (long i = 0; i <= steps; ++i)
    {
        result.omega_grid.push_back(static_cast<double>(i) / static_cast<double>(steps));
    }

    TheoryInputs inp;
    inp.n_train = static_cast<double>(train_size(data_cfg.n, cfg.split_ratio));
    inp.n_valid = static_cast<double>(data_cfg.n) - inp.n_train;
    inp.n_w = static_cast<double>(data_cfg.n_w);
    inp.p = static_cast<double>(data_cfg.p);
    std::vector<PopulationTheory> pops;
    for (std::size_t j = 0; j < K; ++j)
    {
        const auto& pop = data_cfg.populations[j];
        pops.push_back({sigmas[j],
                        ridge_equivalents_cross(BlockSpectrum(sigmas[j]), sigmas[0], inp.n_w, cfg.thetas[j]),
                        pop.kappa, pop.h2, 1.0});
    }
    const auto terms = two_population_terms(inp, pops, data_cfg.cross);
    result.closed_form_omega1 = optimal_two_pop_weights(terms.N1, terms.N2, terms.D1, terms.D2, terms.D3).omega1;
    for (const double w : result.omega_grid)
    {
        pops[0].weight = w;
        pops[1].weight = 1.0 - w;
        result.theory.push_back(theory_r2_multi(inp, pops, data_cfg.cross).r2);
    }

    const auto R = static_cast<std::size_t>(cfg.replicates);
    result.pseudo.assign(R, {});
    result.argmax.assign(R, kNaN);
    parallel_for(R, cfg.seed, [&](std::size_t r) {
        const std::uint64_t rep_seed = derive_seed(cfg.seed, r);
        Rng data_rng = substream(rep_seed, kDataStream);
        const auto datasets = generate_multi_datasets(data_cfg, data_rng);
        Rng pseudo_rng = substream(rep_seed, kPseudoStream);

        std::vector<Eigen::VectorXd> fits;
        std::optional<ValidationContext> target;
        for (std::size_t j = 0; j < K; ++j)
        {
            const auto& data = datasets[j];
            const SummaryStats stats = compute_summary(data.X, data.y);
            const auto cov = make_resampler(cfg.resampler, stats, sigmas[j], data);
            const auto split = pseudo_split(stats, cov, cfg.split_ratio, pseudo_rng, cfg.resampler.noise);
            fits.push_back(RidgeSolver::from_panel(data.W).solve(split.s_train, cfg.thetas[j]));
            if (j == 0)
            {
                const R2Inputs r2in{&sigmas[0], split.n_valid, surrogate_y_norm2(stats, split.n_valid)};
                target = ValidationContext::from_pseudo(split, r2in);
            }
        }
        std::vector<double> curve;
        for (const double w : result.omega_grid)
        {
            curve.push_back(value_or_nan(target->evaluate(w * fits[0] + (1.0 - w) * fits[1])));
        }
        const auto best = select_best(result.omega_grid, curve);
        result.argmax[r] = result.omega_grid[best.best_index];
        result.pseudo[r] = std::move(curve);
    });
    return result;
}

std::vector<ResultRow> MultiResult::rows() const
{
    std::vector<ResultRow> out;
    for (std::size_t g = 0; g < omega_grid.size(); ++g)
    {
        std::vector<double> col;
        for (const auto& curve : pseudo)
        {
            col.push_back(curve[g]);
        }
        const auto m = mean_se(col);
        out.push_back({"multi", fmt(omega_grid[g]), "sum", m.mean, m.se, m.count, seed});
        out.push_back({"multi", fmt(omega_grid[g]), "theory", theory[g], 0.0, 0, seed});
    }
    const auto a = mean_se(argmax);
    out.push_back({"multi", "omega1", "argmax_sum", a.mean, a.se, a.count, seed});
    out.push_back({"multi", "omega1", "closed_form", closed_form_omega1, 0.0, 0, seed});
    return out;
}

double MultiResult::fraction_within(double target, double tol) const
{
    if (argmax.empty())
    {
        return kNaN;
    }
    const auto hits = std::count_if(argmax.begin(), argmax.end(), [&](double a) {
        return std::abs(a - target) <= tol + 1e-12;
    });
    return static_cast<double>(hits) / static_cast<double>(argmax.size());
}

EnsembleStudyResult run_ensemble_study(const EnsembleStudyConfig& cfg)
{
    ExperimentConfig base = cfg.base;
    base.modes = {true, false, false, true};
    require_valid(base);
    const GenConfig& gen = base.gen;
    const BlockCovariance sigma = make_covariance(gen.cov);
    const BlockCovariance root = matrix_sqrt_psd(sigma);
    const auto thetas = theta_grid_of(base.estimator);
    const auto ks = k_grid_of(base.estimator, gen.p);

    const auto R = static_cast<std::size_t>(base.replicates);
    EnsembleStudyResult result;
    result.replicates = base.replicates;
    result.seed = base.seed;
    result.holdout_ensemble.assign(R, kNaN);
    result.holdout_ridge.assign(R, kNaN);
    result.holdout_threshold.assign(R, kNaN);

    parallel_for(R, base.seed, [&](std::size_t r) {
        const std::uint64_t rep_seed = derive_seed(base.seed, r);
        Rng data_rng = substream(rep_seed, kDataStream);
        const Dataset data = generate_dataset(gen, data_rng);
        const SummaryStats stats = compute_summary(data.X, data.y);
        const RidgeSolver solver = RidgeSolver::from_panel(data.W);

        Rng pseudo_rng = substream(rep_seed, kPseudoStream);
        const auto cov = make_resampler(base.resampler, stats, sigma, data);
        const auto split = pseudo_split(stats, cov, base.split_ratio, pseudo_rng, base.resampler.noise);
        const R2Inputs inp{&sigma, split.n_valid, surrogate_y_norm2(stats, split.n_valid)};
        const auto ctx = ValidationContext::from_pseudo(split, inp);

        const Eigen::VectorXd projected = solver.project(ctx.s_train);
        const auto ranking = marginal_ranking(ctx.s_train, solver.gram_diagonal());
        std::vector<double> k_values(ks.begin(), ks.end());
        const std::vector<ComponentFamily> families{
            {"ridge", thetas, [&](double theta) { return solver.solve(ctx.s_train, projected, theta); }},
            {"threshold", k_values,
             [&](double k) { return threshold_fit(ctx.s_train, top_k(ranking, std::llround(k))); }},
        };
        const auto tuned = tune_ensemble(families, ctx, cfg.weight_step);

        Rng test_rng = substream(rep_seed, kTestStream);
        const auto test = draw_test_set(base.n_test, root, data, test_rng);
        result.holdout_ensemble[r] = value_or_nan(r2_holdout(test.X, test.y, tuned.beta));
        result.holdout_ridge[r] = value_or_nan(r2_holdout(
            test.X, test.y, families[0].fit(thetas[tuned.components[0].best_index])));
        result.holdout_threshold[r] = value_or_nan(r2_holdout(
            test.X, test.y, families[1].fit(k_values[tuned.components[1].best_index])));
    });
    return result;
}

std::vector<ResultRow> EnsembleStudyResult::rows() const
{
    std::vector<ResultRow> out;
    const auto add = [&](const std::string& mode, const std::vector<double>& values) {
        const auto m = mean_se(values);
        out.push_back({"ensemble", "tuned", mode, m.mean, m.se, m.count, seed});
    };
    add("holdout_ensemble", holdout_ensemble);
    add("holdout_ridge", holdout_ridge);
    add("holdout_threshold", holdout_threshold);
    std::vector<double> vs_ridge(holdout_ensemble.size());
    std::vector<double> vs_threshold(holdout_ensemble.size());
    for (std::size_t r = 0; r < holdout_ensemble.size(); ++r)
    {
        vs_ridge[r] = holdout_ensemble[r] - holdout_ridge[r];
        vs_threshold[r] = holdout_ensemble[r] - holdout_threshold[r];
    }
    add("ensemble_minus_ridge", vs_ridge);
    add("ensemble_minus_threshold", vs_threshold);
    return out;
}

}  // namespace sumtrain
