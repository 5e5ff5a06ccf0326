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

#include "sumtrain/sumtrain.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "sumtrain/error.hpp"
#include "sumtrain/estimators.hpp"
#include "sumtrain/evaluation.hpp"
#include "sumtrain/harness.hpp"
#include "sumtrain/io.hpp"
#include "sumtrain/model_gen.hpp"
#include "sumtrain/rmt.hpp"
#include "sumtrain/summary.hpp"

struct sumtrain_config
{
    sumtrain::AppConfig cfg;
};

struct sumtrain_table
{
    std::vector<sumtrain::ResultRow> rows;
};

namespace
{

thread_local std::string g_last_error;

sumtrain_status status_of(sumtrain::ErrorKind kind)
{
    switch (kind)
    {
        case sumtrain::ErrorKind::validation:
            return SUMTRAIN_E_VALIDATION;
        case sumtrain::ErrorKind::config:
            return SUMTRAIN_E_CONFIG;
        case sumtrain::ErrorKind::numerical:
            return SUMTRAIN_E_NUMERICAL;
        case sumtrain::ErrorKind::io:
            return SUMTRAIN_E_IO;
    }
    return SUMTRAIN_E_INTERNAL;
}

sumtrain_status set_error(sumtrain_status status, std::string message)
{
    g_last_error = std::move(message);
    return status;
}

template <class F>
sumtrain_status guard(F&& body)
{
    try
    {
        g_last_error.clear();
        body();
        return SUMTRAIN_OK;
    }
    catch (const sumtrain::Error& e)
    {
        return set_error(status_of(e.kind()), e.what());
    }
    catch (const std::bad_alloc&)
    {
        return set_error(SUMTRAIN_E_INTERNAL, "out of memory");
    }
    catch (const std::exception& e)
    {
        return set_error(SUMTRAIN_E_INTERNAL, e.what());
    }
    catch (...)
    {
        return set_error(SUMTRAIN_E_INTERNAL, "unknown failure");
    }
}

void need(const void* ptr, const char* name)
{
    if (ptr == nullptr)
    {
        throw sumtrain::Error(sumtrain::ErrorKind::validation, std::string(name) + " is null");
    }
}

char* dup_string(const std::string& text)
{
    char* out = static_cast<char*>(std::malloc(text.size() + 1));
    if (out == nullptr)
    {
        throw std::bad_alloc();
    }
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

sumtrain_status parse_outcome(sumtrain::ParseOutcome outcome, sumtrain_config** out)
{
    if (!outcome.ok())
    {
        std::string msg;
        for (const auto& e : outcome.errors)
        {
            msg += (msg.empty() ? "" : "\n") + e;
        }
        return set_error(SUMTRAIN_E_CONFIG, msg);
    }
    *out = new sumtrain_config{std::move(*outcome.config)};
    return SUMTRAIN_OK;
}

template <class Run>
sumtrain_status run_table(const sumtrain_config* config, sumtrain_table** out, Run&& run)
{
    if (out)
    {
        *out = nullptr;
    }
    return guard([&] {
        need(config, "config");
        need(out, "out");
        auto table = std::make_unique<sumtrain_table>();
        table->rows = run(config->cfg);
        *out = table.release();
    });
}

Eigen::VectorXd spectrum_of(const double* values, size_t size)
{
    need(values, "spectrum");
    sumtrain::require(size > 0, sumtrain::ErrorKind::validation, "spectrum is empty");
    return Eigen::Map<const Eigen::VectorXd>(values, static_cast<Eigen::Index>(size));
}

sumtrain::ResampleNoise noise_of(sumtrain_noise noise)
{
    return noise == SUMTRAIN_NOISE_RADEMACHER ? sumtrain::ResampleNoise::rademacher
                                              : sumtrain::ResampleNoise::gaussian;
}

Eigen::Index k_of(double value, Eigen::Index p)
{
    sumtrain::require(
        value >= 1.0 && value == std::floor(value) && value <= static_cast<double>(p),
        sumtrain::ErrorKind::validation,
        "k must be an integer in [1, p]");
    return static_cast<Eigen::Index>(value);
}

}  // namespace

extern "C" {

const char* sumtrain_version(void)
{
    return "1.0.0";
}

const char* sumtrain_last_error(void)
{
    return g_last_error.c_str();
}

const char* sumtrain_status_name(sumtrain_status status)
{
    switch (status)
    {
        case SUMTRAIN_OK:
            return "ok";
        case SUMTRAIN_E_VALIDATION:
            return "validation error";
        case SUMTRAIN_E_CONFIG:
            return "configuration error";
        case SUMTRAIN_E_NUMERICAL:
            return "numerical error";
        case SUMTRAIN_E_IO:
            return "i/o error";
        case SUMTRAIN_E_ARGUMENT:
            return "argument error";
        case SUMTRAIN_E_INTERNAL:
            return "internal error";
    }
    return "unknown status";
}

int sumtrain_exit_code(sumtrain_status status)
{
    switch (status)
    {
        case SUMTRAIN_OK:
            return 0;
        case SUMTRAIN_E_NUMERICAL:
            return 2;
        default:
            return 1;
    }
}

void sumtrain_string_free(char* text)
{
    std::free(text);
}

sumtrain_status sumtrain_config_parse_file(const char* path, sumtrain_config** out)
{
    if (out)
    {
        *out = nullptr;
    }
    sumtrain_status status = SUMTRAIN_OK;
    const auto guarded = guard([&] {
        need(path, "path");
        need(out, "out");
        status = parse_outcome(sumtrain::parse_config_file(path), out);
    });
    return guarded != SUMTRAIN_OK ? guarded : status;
}

sumtrain_status sumtrain_config_parse_string(const char* text, const char* base_dir, sumtrain_config** out)
{
    if (out)
    {
        *out = nullptr;
    }
    sumtrain_status status = SUMTRAIN_OK;
    const auto guarded = guard([&] {
        need(text, "text");
        need(out, "out");
        status = parse_outcome(sumtrain::parse_config_string(text, base_dir ? base_dir : "."), out);
    });
    return guarded != SUMTRAIN_OK ? guarded : status;
}

void sumtrain_config_free(sumtrain_config* config)
{
    delete config;
}

sumtrain_status sumtrain_config_set_seed(sumtrain_config* config, uint64_t seed)
{
    return guard([&] {
        need(config, "config");
        config->cfg.seed = seed;
        config->cfg.data.seed = seed;
    });
}

sumtrain_status sumtrain_config_get_seed(const sumtrain_config* config, uint64_t* seed)
{
    return guard([&] {
        need(config, "config");
        need(seed, "seed");
        *seed = config->cfg.seed;
    });
}

sumtrain_status sumtrain_config_set_replicates(sumtrain_config* config, int replicates)
{
    return guard([&] {
        need(config, "config");
        sumtrain::require(replicates >= 1, sumtrain::ErrorKind::validation, "replicates must be >= 1");
        config->cfg.replicates = replicates;
    });
}

sumtrain_status sumtrain_config_set_output(sumtrain_config* config, const char* path)
{
    return guard([&] {
        need(config, "config");
        config->cfg.output = path ? path : "";
    });
}

sumtrain_status sumtrain_config_get_output(const sumtrain_config* config, char** path)
{
    return guard([&] {
        need(config, "config");
        need(path, "path");
        *path = dup_string(config->cfg.output);
    });
}

sumtrain_status sumtrain_config_serialize(const sumtrain_config* config, char** text)
{
    return guard([&] {
        need(config, "config");
        need(text, "text");
        *text = dup_string(sumtrain::serialize_config(config->cfg));
    });
}

sumtrain_status sumtrain_config_equal(const sumtrain_config* a, const sumtrain_config* b, int* equal)
{
    return guard([&] {
        need(a, "a");
        need(b, "b");
        need(equal, "equal");
        *equal = a->cfg == b->cfg ? 1 : 0;
    });
}

sumtrain_status sumtrain_run_sweep(const sumtrain_config* config, sumtrain_table** out)
{
    return run_table(config, out, [](const sumtrain::AppConfig& cfg) {
        return sumtrain::run_sweep(sumtrain::experiment_of(cfg)).rows();
    });
}

sumtrain_status sumtrain_run_parity(const sumtrain_config* config, sumtrain_table** out)
{
    return run_table(config, out, [](const sumtrain::AppConfig& cfg) {
        return sumtrain::run_parity(sumtrain::parity_of(cfg)).rows();
    });
}

sumtrain_status sumtrain_run_ratio(const sumtrain_config* config, sumtrain_table** out)
{
    return run_table(config, out, [](const sumtrain::AppConfig& cfg) {
        return sumtrain::run_ratio_convergence(sumtrain::ratio_of(cfg)).rows();
    });
}

sumtrain_status sumtrain_run_multi(const sumtrain_config* config, sumtrain_table** out)
{
    return run_table(config, out, [](const sumtrain::AppConfig& cfg) {
        return sumtrain::run_multi_experiment(sumtrain::multi_of(cfg)).rows();
    });
}

sumtrain_status sumtrain_run_ensemble(const sumtrain_config* config, sumtrain_table** out)
{
    return run_table(config, out, [](const sumtrain::AppConfig& cfg) {
        return sumtrain::run_ensemble_study(sumtrain::ensemble_of(cfg)).rows();
    });
}

size_t sumtrain_table_size(const sumtrain_table* table)
{
    return table ? table->rows.size() : 0;
}

sumtrain_status sumtrain_table_row(const sumtrain_table* table, size_t index, sumtrain_row* row)
{
    return guard([&] {
        need(table, "table");
        need(row, "row");
        sumtrain::require(index < table->rows.size(), sumtrain::ErrorKind::validation, "row index out of range");
        const auto& r = table->rows[index];
        *row = {r.setting_id.c_str(), r.hyperparameter.c_str(), r.mode.c_str(), r.mean, r.se, r.n_replicates, r.seed};
    });
}

sumtrain_status sumtrain_table_csv(const sumtrain_table* table, char** text)
{
    return guard([&] {
        need(table, "table");
        need(text, "text");
        *text = dup_string(sumtrain::results_csv(table->rows));
    });
}

sumtrain_status sumtrain_table_write_csv(const sumtrain_table* table, const char* path)
{
    return guard([&] {
        need(table, "table");
        need(path, "path");
        sumtrain::write_results(path, table->rows);
    });
}

void sumtrain_table_free(sumtrain_table* table)
{
    delete table;
}

sumtrain_status sumtrain_generate(const sumtrain_config* config, const char* out_dir)
{
    return guard([&] {
        need(config, "config");
        need(out_dir, "out_dir");
        const std::filesystem::path dir(out_dir);
        const auto exp = sumtrain::experiment_of(config->cfg);
        const auto data = sumtrain::generate_dataset(exp.gen);
        sumtrain::write_matrix(dir / "X.csv", data.X);
        sumtrain::write_vector(dir / "y.csv", data.y);
        sumtrain::write_vector(dir / "beta.csv", data.beta);
        sumtrain::write_matrix(dir / "W.csv", data.W);
        std::ofstream cov(dir / "covariance.json");
        cov << sumtrain::covariance_spec_json(exp.gen.cov);
        sumtrain::require(static_cast<bool>(cov), sumtrain::ErrorKind::io, "cannot write covariance.json");
    });
}

sumtrain_status sumtrain_summarize(const char* x_path, const char* y_path, const char* out_path)
{
    return guard([&] {
        need(x_path, "x_path");
        need(y_path, "y_path");
        need(out_path, "out_path");
        const Eigen::MatrixXd X = sumtrain::read_matrix(x_path);
        const Eigen::VectorXd y = sumtrain::read_vector(y_path);
        sumtrain::require(
            X.rows() == y.size(), sumtrain::ErrorKind::validation, "X and y have different row counts");
        sumtrain::write_summary(out_path, sumtrain::compute_summary(X, y));
    });
}

sumtrain_status sumtrain_ld_from_panel(const char* w_path, const char* out_path)
{
    return guard([&] {
        need(w_path, "w_path");
        need(out_path, "out_path");
        sumtrain::write_ld(out_path, sumtrain::LDReference::from_panel(sumtrain::read_matrix(w_path)));
    });
}

sumtrain_status sumtrain_split(
    const char* summary_path,
    const char* ld_path,
    double ratio,
    uint64_t seed,
    sumtrain_noise noise,
    const char* train_out,
    const char* valid_out)
{
    return guard([&] {
        need(summary_path, "summary_path");
        need(ld_path, "ld_path");
        need(train_out, "train_out");
        need(valid_out, "valid_out");
        const auto stats = sumtrain::read_summary(summary_path);
        const auto ld = sumtrain::read_ld(ld_path);
        sumtrain::require(stats.y_norm2.has_value(), sumtrain::ErrorKind::validation,
                          "summary file lacks a #y_norm2 entry");
        sumtrain::require(ld.p() == stats.p(), sumtrain::ErrorKind::validation, "LD and summary sizes differ");
        const auto cov = sumtrain::XtYCovariance::plugin(*stats.y_norm2 / static_cast<double>(ld.n_w), ld.G);
        sumtrain::Rng rng(seed);
        const auto split = sumtrain::pseudo_split(stats, cov, ratio, rng, noise_of(noise));

        sumtrain::SummaryStats train;
        train.s = split.s_train;
        train.n = split.n_train;
        train.y_norm2 = sumtrain::surrogate_y_norm2(stats, split.n_train);
        train.ids = stats.ids;
        sumtrain::SummaryStats valid;
        valid.s = split.s_valid;
        valid.n = split.n_valid;
        valid.y_norm2 = sumtrain::surrogate_y_norm2(stats, split.n_valid);
        valid.ids = stats.ids;
        sumtrain::write_summary(train_out, train);
        sumtrain::write_summary(valid_out, valid);
    });
}

sumtrain_status sumtrain_fit(
    const char* summary_path, const char* ld_path, sumtrain_family family, double value, const char* out_path)
{
    return guard([&] {
        need(summary_path, "summary_path");
        need(ld_path, "ld_path");
        need(out_path, "out_path");
        const auto stats = sumtrain::read_summary(summary_path);
        const auto ld = sumtrain::read_ld(ld_path);
        sumtrain::require(ld.p() == stats.p(), sumtrain::ErrorKind::validation, "LD and summary sizes differ");
        Eigen::VectorXd beta;
        if (family == SUMTRAIN_FAMILY_RIDGE)
        {
            beta = sumtrain::ridge_fit(stats.s, ld, value);
        }
        else
        {
            const auto ranking = sumtrain::marginal_ranking(stats.s, ld.G.diagonal());
            beta = sumtrain::threshold_fit(stats.s, sumtrain::top_k(ranking, k_of(value, stats.p())));
        }
        sumtrain::write_vector(out_path, beta);
    });
}

sumtrain_status sumtrain_tune(
    const char* train_path,
    const char* valid_path,
    const char* ld_path,
    sumtrain_family family,
    const double* grid,
    size_t grid_size,
    const char* out_path,
    double* best)
{
    return guard([&] {
        need(train_path, "train_path");
        need(valid_path, "valid_path");
        need(ld_path, "ld_path");
        need(grid, "grid");
        sumtrain::require(grid_size > 0, sumtrain::ErrorKind::validation, "grid is empty");
        const auto train = sumtrain::read_summary(train_path);
        const auto valid = sumtrain::read_summary(valid_path);
        const auto ld = sumtrain::read_ld(ld_path);
        sumtrain::require(
            train.p() == valid.p() && ld.p() == train.p(), sumtrain::ErrorKind::validation,
            "summary and LD sizes differ");
        sumtrain::require(valid.y_norm2.has_value(), sumtrain::ErrorKind::validation,
                          "validation summary lacks a #y_norm2 entry");
        const auto sigma = sumtrain::BlockCovariance::from_dense(ld.G / static_cast<double>(ld.n_w));
        sumtrain::ValidationContext ctx{train.s, valid.s, {&sigma, valid.n, *valid.y_norm2}};
        const std::vector<double> values(grid, grid + grid_size);

        sumtrain::TuneResult result;
        if (family == SUMTRAIN_FAMILY_RIDGE)
        {
            result = sumtrain::tune_theta(sumtrain::RidgeSolver::from_reference(ld), values, ctx);
        }
        else
        {
            std::vector<Eigen::Index> ks;
            for (const double v : values)
            {
                ks.push_back(k_of(v, train.p()));
            }
            result = sumtrain::tune_threshold(ks, ld.G.diagonal(), ctx);
        }
        if (best)
        {
            *best = result.grid[result.best_index];
        }
        if (out_path)
        {
            std::vector<sumtrain::ResultRow> rows;
            const std::string setting = family == SUMTRAIN_FAMILY_RIDGE ? "tune/ridge" : "tune/threshold";
            for (std::size_t i = 0; i < result.grid.size(); ++i)
            {
                rows.push_back({setting, sumtrain::format_decimal(result.grid[i]), "pseudo", result.curve[i], 0.0, 1, 0});
            }
            sumtrain::write_results(out_path, rows);
        }
    });
}

sumtrain_status sumtrain_solve_tau(const double* spectrum, size_t size, double n, double theta, double* tau)
{
    return guard([&] {
        need(tau, "tau");
        *tau = sumtrain::solve_tau(spectrum_of(spectrum, size), n, theta);
    });
}

sumtrain_status sumtrain_compute_rho(
    const double* spectrum, size_t size, double n, double theta, double tau, double* rho)
{
    return guard([&] {
        need(rho, "rho");
        *rho = sumtrain::compute_rho(spectrum_of(spectrum, size), n, theta, tau);
    });
}

sumtrain_status sumtrain_identity_tau(double gamma, double theta, double* tau)
{
    return guard([&] {
        need(tau, "tau");
        *tau = sumtrain::identity_tau(gamma, theta);
    });
}

sumtrain_status sumtrain_identity_rho(double gamma, double theta, double* rho)
{
    return guard([&] {
        need(rho, "rho");
        *rho = sumtrain::identity_rho(gamma, theta);
    });
}

sumtrain_status sumtrain_theory_r2_ridge(
    const sumtrain_theory_inputs* inputs, const double* spectrum, size_t size, double theta, double* r2)
{
    return guard([&] {
        need(inputs, "inputs");
        need(r2, "r2");
        sumtrain::TheoryInputs inp;
        inp.n_train = inputs->n_train;
        inp.n_valid = inputs->n_valid;
        inp.n_w = inputs->n_w;
        inp.p = inputs->p;
        inp.kappa = inputs->kappa;
        inp.sigma_beta2 = inputs->sigma_beta2;
        inp.h2 = inputs->h2;
        sumtrain::validate(inp);
        sumtrain::require(
            inp.p == std::floor(inp.p), sumtrain::ErrorKind::validation, "p must be an integer");
        const Eigen::VectorXd lambda = spectrum ? spectrum_of(spectrum, size)
                                                : Eigen::VectorXd::Ones(static_cast<Eigen::Index>(inp.p));
        *r2 = sumtrain::theory_r2_ridge(inp, lambda, theta);
    });
}

sumtrain_status sumtrain_identity_closed_form_r2(
    double theta, double gamma_w, double h2, double p, double n_train, double n_w, double* r2)
{
    return guard([&] {
        need(r2, "r2");
        *r2 = sumtrain::identity_ridge_closed_form_r2(theta, gamma_w, h2, p, n_train, n_w);
    });
}

sumtrain_status sumtrain_optimal_two_pop_weights(
    double N1, double N2, double D1, double D2, double D3, double* omega1, double* omega2)
{
    return guard([&] {
        need(omega1, "omega1");
        need(omega2, "omega2");
        const auto w = sumtrain::optimal_two_pop_weights(N1, N2, D1, D2, D3);
        *omega1 = w.omega1;
        *omega2 = w.omega2;
    });
}

}  // extern "C"
