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

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sumtrain/sumtrain.h"

namespace
{

constexpr int kUsageExit = 64;

struct Common
{
    std::optional<std::uint64_t> seed;
    std::string config;
    std::string out;
};

void add_common(CLI::App* cmd, Common& common)
{
    cmd->add_option("--seed", common.seed, "Master seed (overrides the configuration)");
    cmd->add_option("--config", common.config, "Configuration file");
    cmd->add_option("--out", common.out, "Output path");
}

int report(sumtrain_status status)
{
    if (status == SUMTRAIN_OK)
    {
        return 0;
    }
    std::fprintf(stderr, "error (%s):\n%s\n", sumtrain_status_name(status), sumtrain_last_error());
    return sumtrain_exit_code(status);
}

int usage(const std::string& message)
{
    std::fprintf(stderr, "%s\nRun with --help for usage.\n", message.c_str());
    return kUsageExit;
}

struct ConfigHandle
{
    sumtrain_config* ptr = nullptr;
    ~ConfigHandle() { sumtrain_config_free(ptr); }
};

struct TableHandle
{
    sumtrain_table* ptr = nullptr;
    ~TableHandle() { sumtrain_table_free(ptr); }
};

sumtrain_status load(const Common& common, ConfigHandle& handle)
{
    auto status = sumtrain_config_parse_file(common.config.c_str(), &handle.ptr);
    if (status == SUMTRAIN_OK && common.seed)
    {
        status = sumtrain_config_set_seed(handle.ptr, *common.seed);
    }
    if (status == SUMTRAIN_OK && !common.out.empty())
    {
        status = sumtrain_config_set_output(handle.ptr, common.out.c_str());
    }
    return status;
}

using Runner = sumtrain_status (*)(const sumtrain_config*, sumtrain_table**);

int run_experiment(const Common& common, Runner runner)
{
    if (common.config.empty())
    {
        return usage("--config is required");
    }
    ConfigHandle cfg;
    if (const auto s = load(common, cfg); s != SUMTRAIN_OK)
    {
        return report(s);
    }
    TableHandle table;
    if (const auto s = runner(cfg.ptr, &table.ptr); s != SUMTRAIN_OK)
    {
        return report(s);
    }
    char* output = nullptr;
    if (const auto s = sumtrain_config_get_output(cfg.ptr, &output); s != SUMTRAIN_OK)
    {
        return report(s);
    }
    const std::string path = output;
    sumtrain_string_free(output);
    if (!path.empty())
    {
        return report(sumtrain_table_write_csv(table.ptr, path.c_str()));
    }
    char* csv = nullptr;
    if (const auto s = sumtrain_table_csv(table.ptr, &csv); s != SUMTRAIN_OK)
    {
        return report(s);
    }
    std::fputs(csv, stdout);
    sumtrain_string_free(csv);
    return 0;
}

/// Runs the ensemble study instead of a plain sweep when the configuration
/// carries an "ensemble" section.
sumtrain_status sweep_or_ensemble(const sumtrain_config* cfg, sumtrain_table** out)
{
    char* text = nullptr;
    if (const auto s = sumtrain_config_serialize(cfg, &text); s != SUMTRAIN_OK)
    {
        return s;
    }
    const bool ensemble = std::string(text).find("\"ensemble\"") != std::string::npos;
    sumtrain_string_free(text);
    return ensemble ? sumtrain_run_ensemble(cfg, out) : sumtrain_run_sweep(cfg, out);
}

sumtrain_family family_of(const std::string& name)
{
    return name == "threshold" ? SUMTRAIN_FAMILY_THRESHOLD : SUMTRAIN_FAMILY_RIDGE;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Resampling-based tuning of summary-statistic predictors"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(sumtrain_version()));

    // generate
    Common gen_common;
    auto* gen = app.add_subcommand("generate", "Simulate X, y, beta and W from a configuration");
    add_common(gen, gen_common);

    // summarize
    Common sum_common;
    std::string sum_x;
    std::string sum_y;
    std::string sum_w;
    auto* summarize = app.add_subcommand("summarize", "Summary statistics from X and y, or an LD file from W");
    add_common(summarize, sum_common);
    summarize->add_option("--x", sum_x, "Design matrix CSV");
    summarize->add_option("--y", sum_y, "Response CSV");
    summarize->add_option("--panel", sum_w, "Reference panel CSV (writes an LD file)");

    // split
    Common split_common;
    std::string split_summary;
    std::string split_ld;
    double split_ratio = 0.8;
    std::string split_noise = "gaussian";
    auto* split = app.add_subcommand("split", "Pseudo train/validation split of a summary file");
    add_common(split, split_common);
    split->add_option("--summary", split_summary, "Summary file")->required();
    split->add_option("--ld", split_ld, "LD file")->required();
    split->add_option("--ratio", split_ratio, "Training fraction")->check(CLI::Range(0.0, 1.0));
    split->add_option("--noise", split_noise, "gaussian or rademacher")
        ->check(CLI::IsMember({"gaussian", "rademacher"}));

    // fit
    Common fit_common;
    std::string fit_summary;
    std::string fit_ld;
    std::string fit_family = "ridge";
    double fit_value = 1.0;
    auto* fit = app.add_subcommand("fit", "Fit ridge or top-k thresholding from summaries");
    add_common(fit, fit_common);
    fit->add_option("--summary", fit_summary, "Summary file")->required();
    fit->add_option("--ld", fit_ld, "LD file")->required();
    fit->add_option("--family", fit_family, "ridge or threshold")->check(CLI::IsMember({"ridge", "threshold"}));
    fit->add_option("--value", fit_value, "theta for ridge, k for threshold");

    // tune
    Common tune_common;
    std::string tune_train;
    std::string tune_valid;
    std::string tune_ld;
    std::string tune_family = "ridge";
    std::vector<double> tune_grid;
    auto* tune = app.add_subcommand("tune", "Score a hyperparameter grid on pseudo-validation summaries");
    add_common(tune, tune_common);
    tune->add_option("--train", tune_train, "Training summary file")->required();
    tune->add_option("--valid", tune_valid, "Validation summary file")->required();
    tune->add_option("--ld", tune_ld, "LD file")->required();
    tune->add_option("--family", tune_family, "ridge or threshold")->check(CLI::IsMember({"ridge", "threshold"}));
    tune->add_option("--grid", tune_grid, "Grid values (theta or k)")->required();

    // theory
    Common th_common;
    std::string preset = "ridge";
    double th_theta = 1.0;
    std::optional<double> th_gamma_w;
    double th_h2 = 0.5;
    double th_p = 1000;
    double th_n_train = 800;
    double th_n_valid = 200;
    double th_n_w = 1000;
    double th_kappa = 1.0;
    double th_sigma_beta2 = 1.0;
    auto* theory = app.add_subcommand("theory", "Evaluate the identity-covariance ridge R^2 formulas");
    add_common(theory, th_common);
    theory->add_option("--preset", preset, "closed-form (identity shortcut) or ridge (general formula)")
        ->check(CLI::IsMember({"closed-form", "ridge"}));
    theory->add_option("--theta", th_theta, "Ridge penalty");
    theory->add_option("--gamma-w", th_gamma_w, "p / n_w (defaults to p / n-w)");
    theory->add_option("--h2", th_h2, "Heritability");
    theory->add_option("--p", th_p, "Dimension");
    theory->add_option("--n-train", th_n_train, "Training sample size");
    theory->add_option("--n-valid", th_n_valid, "Validation sample size");
    theory->add_option("--n-w", th_n_w, "Reference panel size");
    theory->add_option("--kappa", th_kappa, "Non-null fraction");
    theory->add_option("--sigma-beta2", th_sigma_beta2, "Effect variance scale");

    Common sweep_common;
    auto* sweep = app.add_subcommand("sweep", "Hyperparameter sweep (or ensemble study) over replicates");
    add_common(sweep, sweep_common);
    Common parity_common;
    auto* parity = app.add_subcommand("parity", "Hold-out parity of pseudo and individual tuning");
    add_common(parity, parity_common);
    Common ratio_common;
    auto* ratio = app.add_subcommand("ratio", "R^2 ratio convergence across sample sizes");
    add_common(ratio, ratio_common);
    Common multi_common;
    auto* multi = app.add_subcommand("multi", "Two-population weight study");
    add_common(multi, multi_common);
    Common val_common;
    auto* validate = app.add_subcommand("validate", "Check a configuration file and list every error");
    add_common(validate, val_common);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForVersion& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        std::fprintf(stderr, "%s\n\n%s", e.what(), app.help().c_str());
        return kUsageExit;
    }

    if (gen->parsed())
    {
        if (gen_common.config.empty() || gen_common.out.empty())
        {
            return usage("generate needs --config and --out");
        }
        ConfigHandle cfg;
        if (const auto s = load(gen_common, cfg); s != SUMTRAIN_OK)
        {
            return report(s);
        }
        return report(sumtrain_generate(cfg.ptr, gen_common.out.c_str()));
    }
    if (summarize->parsed())
    {
        if (sum_common.out.empty())
        {
            return usage("summarize needs --out");
        }
        if (!sum_w.empty())
        {
            return report(sumtrain_ld_from_panel(sum_w.c_str(), sum_common.out.c_str()));
        }
        if (sum_x.empty() || sum_y.empty())
        {
            return usage("summarize needs --x and --y, or --panel");
        }
        return report(sumtrain_summarize(sum_x.c_str(), sum_y.c_str(), sum_common.out.c_str()));
    }
    if (split->parsed())
    {
        if (split_common.out.empty())
        {
            return usage("split needs --out (a directory)");
        }
        const std::filesystem::path dir(split_common.out);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        const auto train = (dir / "train.csv").string();
        const auto valid = (dir / "valid.csv").string();
        return report(sumtrain_split(
            split_summary.c_str(), split_ld.c_str(), split_ratio, split_common.seed.value_or(1),
            split_noise == "rademacher" ? SUMTRAIN_NOISE_RADEMACHER : SUMTRAIN_NOISE_GAUSSIAN, train.c_str(),
            valid.c_str()));
    }
    if (fit->parsed())
    {
        if (fit_common.out.empty())
        {
            return usage("fit needs --out");
        }
        return report(sumtrain_fit(
            fit_summary.c_str(), fit_ld.c_str(), family_of(fit_family), fit_value, fit_common.out.c_str()));
    }
    if (tune->parsed())
    {
        double best = 0.0;
        const auto s = sumtrain_tune(
            tune_train.c_str(), tune_valid.c_str(), tune_ld.c_str(), family_of(tune_family), tune_grid.data(),
            tune_grid.size(), tune_common.out.empty() ? nullptr : tune_common.out.c_str(), &best);
        if (s == SUMTRAIN_OK)
        {
            std::printf("%.9g\n", best);
        }
        return report(s);
    }
    if (theory->parsed())
    {
        double r2 = 0.0;
        sumtrain_status s = SUMTRAIN_OK;
        if (preset == "closed-form")
        {
            const double gamma_w = th_gamma_w.value_or(th_p / th_n_w);
            s = sumtrain_identity_closed_form_r2(th_theta, gamma_w, th_h2, th_p, th_n_train, th_n_w, &r2);
        }
        else
        {
            if (th_gamma_w)
            {
                th_n_w = th_p / *th_gamma_w;
            }
            const sumtrain_theory_inputs inputs{
                th_n_train, th_n_valid, th_n_w, th_p, th_kappa, th_sigma_beta2, th_h2};
            s = sumtrain_theory_r2_ridge(&inputs, nullptr, 0, th_theta, &r2);
        }
        if (s == SUMTRAIN_OK)
        {
            std::printf("%.9g\n", r2);
        }
        return report(s);
    }
    if (sweep->parsed())
    {
        return run_experiment(sweep_common, sweep_or_ensemble);
    }
    if (parity->parsed())
    {
        return run_experiment(parity_common, sumtrain_run_parity);
    }
    if (ratio->parsed())
    {
        return run_experiment(ratio_common, sumtrain_run_ratio);
    }
    if (multi->parsed())
    {
        return run_experiment(multi_common, sumtrain_run_multi);
    }
    if (validate->parsed())
    {
        if (val_common.config.empty())
        {
            return usage("validate needs --config");
        }
        ConfigHandle cfg;
        const auto s = load(val_common, cfg);
        if (s == SUMTRAIN_OK)
        {
            std::printf("ok\n");
        }
        return report(s);
    }
    return usage("no subcommand");
}
