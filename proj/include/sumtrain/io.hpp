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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sumtrain/harness.hpp"
#include "sumtrain/summary.hpp"

namespace sumtrain
{

/// Decimal text with 9 significant digits.
std::string format_decimal(double value);

struct ParitySection
{
    std::vector<double> h2;
    std::vector<Eigen::Index> p;
    std::vector<double> kappa;

    bool operator==(const ParitySection&) const = default;
};

struct RatioSection
{
    std::vector<Eigen::Index> n;
    std::vector<double> theta;

    bool operator==(const RatioSection&) const = default;
};

struct MultiPopulationSection
{
    CovarianceSpec cov;
    std::string cov_file;  // dense covariance source, empty when inline
    double kappa = 0.1;
    double h2 = 0.5;
    double theta = 1.0;

    bool operator==(const MultiPopulationSection&) const = default;
};

struct MultiSection
{
    std::vector<MultiPopulationSection> populations;
    Eigen::MatrixXd cross;
    double weight_step = 0.05;

    bool operator==(const MultiSection&) const = default;
};

struct EnsembleSection
{
    double weight_step = 0.05;

    bool operator==(const EnsembleSection&) const = default;
};

/// Versioned JSON configuration shared by every CLI workflow.
struct AppConfig
{
    int version = 1;
    std::uint64_t seed = 1;
    int replicates = 50;
    double split_ratio = 0.8;
    std::string output;

    GenConfig data;
    std::string cov_file;  // dense covariance source, empty when inline
    Eigen::Index n_test = 1000;
    EstimatorConfig estimator;
    ResamplerConfig resampler;
    EvaluatorModes modes;

    std::optional<ParitySection> parity;
    std::optional<RatioSection> ratio;
    std::optional<MultiSection> multi;
    std::optional<EnsembleSection> ensemble;

    bool operator==(const AppConfig&) const = default;
};

struct ParseOutcome
{
    std::optional<AppConfig> config;
    std::vector<std::string> errors;  // every problem found, path-qualified

    [[nodiscard]] bool ok() const noexcept { return config.has_value(); }
};

/// Relative covariance file paths resolve against base_dir.
ParseOutcome parse_config_string(const std::string& text, const std::filesystem::path& base_dir = {});
ParseOutcome parse_config_file(const std::filesystem::path& path);

/// Throws Error(config) listing every problem.
AppConfig load_config(const std::filesystem::path& path);

std::string serialize_config(const AppConfig& cfg);

ExperimentConfig experiment_of(const AppConfig& cfg);
ParityConfig parity_of(const AppConfig& cfg);
RatioConfig ratio_of(const AppConfig& cfg);
MultiExperimentConfig multi_of(const AppConfig& cfg);
EnsembleStudyConfig ensemble_of(const AppConfig& cfg);

/// header "id,s,n", one row per coordinate, optional "#y_norm2=" trailer.
void write_summary(const std::filesystem::path& path, const SummaryStats& stats);
SummaryStats read_summary(const std::filesystem::path& path);

/// Comma-separated rows; an optional "#n_w=<int>" line.
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m, std::optional<Eigen::Index> n_w = {});
Eigen::MatrixXd read_matrix(const std::filesystem::path& path, std::optional<Eigen::Index>* n_w = nullptr);

void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector(const std::filesystem::path& path);

/// LD gram file: matrix plus "#n_w="; symmetry checked on load.
void write_ld(const std::filesystem::path& path, const LDReference& ld);
LDReference read_ld(const std::filesystem::path& path);

/// Dense CSV or a JSON covariance spec (first non-blank character '{').
CovarianceSpec read_covariance(const std::filesystem::path& path);

std::string covariance_spec_json(const CovarianceSpec& spec);

inline constexpr const char* kResultsHeader = "setting_id,hyperparameter,mode,mean,se,n_replicates,seed";

std::string results_csv(const std::vector<ResultRow>& rows);
void write_results(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results(const std::filesystem::path& path);

}  // namespace sumtrain
