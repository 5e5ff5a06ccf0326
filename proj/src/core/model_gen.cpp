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

#include "sumtrain/model_gen.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "sumtrain/error.hpp"

namespace sumtrain
{

namespace
{

constexpr double kSymmetryTolerance = 1e-8;
constexpr double kNegativeEigenTolerance = 1e-10;

double max_asymmetry(const Eigen::MatrixXd& m)
{
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

double scale_of(const Eigen::MatrixXd& m)
{
    return std::max(1.0, m.cwiseAbs().maxCoeff());
}

std::string join(const std::vector<std::string>& messages)
{
    std::ostringstream out;
    for (std::size_t i = 0; i < messages.size(); ++i)
    {
        out << (i ? "; " : "") << messages[i];
    }
    return out.str();
}

Eigen::MatrixXd ar1_block(Eigen::Index size, double rho)
{
    Eigen::MatrixXd block(size, size);
    for (Eigen::Index i = 0; i < size; ++i)
    {
        for (Eigen::Index j = 0; j < size; ++j)
        {
            block(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
        }
    }
    return block;
}

void check_h2_feasible(double h2, double signal)
{
    require(
        h2 >= 0.0 && h2 <= 1.0,
        ErrorKind::validation,
        "target_h2 must lie in [0, 1]");
    require(
        !(h2 == 0.0 && signal > 0.0),
        ErrorKind::config,
        "target_h2 = 0 with kappa * sigma_beta2 > 0 needs infinite noise");
}

}  // namespace

std::vector<std::string> validate(const CovarianceSpec& spec)
{
    std::vector<std::string> errors;
    if (spec.p < 1)
    {
        errors.emplace_back("p must be >= 1");
        return errors;
    }
    switch (spec.kind)
    {
        case CovarianceKind::identity:
            break;
        case CovarianceKind::block_ar1:
            if (spec.n_block < 1)
            {
                errors.emplace_back("n_block must be >= 1");
            }
            else if (spec.p % spec.n_block != 0)
            {
                errors.emplace_back("p must be divisible by n_block");
            }
            if (!(spec.rho >= 0.0 && spec.rho < 1.0))
            {
                errors.emplace_back("rho must lie in [0, 1)");
            }
            break;
        case CovarianceKind::dense:
            if (spec.matrix.rows() != spec.p || spec.matrix.cols() != spec.p)
            {
                errors.emplace_back("dense covariance must be p x p");
            }
            else if (!spec.matrix.allFinite())
            {
                errors.emplace_back("dense covariance has non-finite entries");
            }
            else if (max_asymmetry(spec.matrix) > kSymmetryTolerance * scale_of(spec.matrix))
            {
                errors.emplace_back("dense covariance is not symmetric");
            }
            else
            {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
                    spec.matrix, Eigen::EigenvaluesOnly);
                if (solver.eigenvalues().minCoeff() <= 0.0)
                {
                    errors.emplace_back("dense covariance is not positive definite");
                }
            }
            break;
    }
    return errors;
}

BlockCovariance make_covariance(const CovarianceSpec& spec)
{
    if (spec.kind == CovarianceKind::block_ar1 && spec.n_block >= 1 && spec.p >= 1
        && spec.p % spec.n_block != 0)
    {
        fail(ErrorKind::config, "p must be divisible by n_block");
    }
    const auto errors = validate(spec);
    require(errors.empty(), ErrorKind::validation, "invalid covariance: " + join(errors));

    switch (spec.kind)
    {
        case CovarianceKind::identity:
            return BlockCovariance::identity(spec.p);
        case CovarianceKind::block_ar1:
        {
            const Eigen::Index size = spec.p / spec.n_block;
            std::vector<Eigen::MatrixXd> blocks(
                static_cast<std::size_t>(spec.n_block), ar1_block(size, spec.rho));
            return BlockCovariance(std::move(blocks));
        }
        case CovarianceKind::dense:
            return BlockCovariance::from_dense(0.5 * (spec.matrix + spec.matrix.transpose()));
    }
    fail(ErrorKind::validation, "unknown covariance kind");
}

Eigen::MatrixXd build_covariance(const CovarianceSpec& spec)
{
    return make_covariance(spec).dense();
}

Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m)
{
    require(m.rows() == m.cols(), ErrorKind::validation, "matrix_sqrt_psd needs a square matrix");
    if (m.size() == 0)
    {
        return m;
    }
    const double scale = scale_of(m);
    const double asym = max_asymmetry(m);
    require(
        asym <= kSymmetryTolerance * scale,
        ErrorKind::validation,
        "matrix_sqrt_psd: input not symmetric (max asymmetry " + std::to_string(asym) + ")");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (m + m.transpose()));
    require(solver.info() == Eigen::Success, ErrorKind::numerical, "eigendecomposition failed");
    const Eigen::VectorXd& values = solver.eigenvalues();
    require(
        values.minCoeff() >= -kNegativeEigenTolerance * scale,
        ErrorKind::validation,
        "matrix_sqrt_psd: input has a negative eigenvalue " + std::to_string(values.minCoeff()));

    const Eigen::VectorXd roots = values.cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd root
        = solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().transpose();
    return 0.5 * (root + root.transpose());
}

BlockCovariance matrix_sqrt_psd(const BlockCovariance& m)
{
    std::vector<Eigen::MatrixXd> blocks;
    blocks.reserve(m.block_count());
    for (std::size_t k = 0; k < m.block_count(); ++k)
    {
        const auto& b = m.block(k);
        if (b.rows() == 1)
        {
            require(
                b(0, 0) >= -kNegativeEigenTolerance,
                ErrorKind::validation,
                "matrix_sqrt_psd: negative diagonal entry");
            blocks.emplace_back(Eigen::MatrixXd::Constant(1, 1, std::sqrt(std::max(b(0, 0), 0.0))));
        }
        else
        {
            blocks.push_back(matrix_sqrt_psd(b));
        }
    }
    return BlockCovariance(std::move(blocks));
}

std::vector<std::string> validate(const GenConfig& cfg)
{
    std::vector<std::string> errors;
    if (cfg.n < 1)
    {
        errors.emplace_back("n must be >= 1");
    }
    if (cfg.p < 1)
    {
        errors.emplace_back("p must be >= 1");
    }
    if (cfg.n_w < 1)
    {
        errors.emplace_back("n_w must be >= 1");
    }
    if (!(cfg.kappa >= 0.0 && cfg.kappa <= 1.0))
    {
        errors.emplace_back("kappa must lie in [0, 1]");
    }
    if (!(cfg.sigma_beta2 > 0.0) || !std::isfinite(cfg.sigma_beta2))
    {
        errors.emplace_back("sigma_beta2 must be positive and finite");
    }
    if (!(cfg.target_h2 >= 0.0 && cfg.target_h2 <= 1.0))
    {
        errors.emplace_back("target_h2 must lie in [0, 1]");
    }
    else if (cfg.target_h2 == 0.0 && cfg.kappa * cfg.sigma_beta2 > 0.0)
    {
        errors.emplace_back("target_h2 = 0 requires kappa * sigma_beta2 = 0");
    }
    if (cfg.cov.p != cfg.p)
    {
        errors.emplace_back("covariance dimension does not match p");
    }
    for (auto& e : validate(cfg.cov))
    {
        errors.push_back("cov: " + e);
    }
    return errors;
}

Eigen::VectorXd sample_effects(const GenConfig& cfg, Rng& rng)
{
    require(
        cfg.kappa >= 0.0 && cfg.kappa <= 1.0, ErrorKind::validation, "kappa must lie in [0, 1]");
    const double sd = std::sqrt(cfg.sigma_beta2 / static_cast<double>(cfg.p));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution sign(0.5);
    std::bernoulli_distribution keep(cfg.kappa);

    Eigen::VectorXd beta(cfg.p);
    for (Eigen::Index i = 0; i < cfg.p; ++i)
    {
        const double value = cfg.effect_dist == EffectDistribution::gaussian
                                 ? sd * normal(rng)
                                 : (sign(rng) ? sd : -sd);
        beta(i) = keep(rng) ? value : 0.0;
    }
    return beta;
}

double calibrate_noise(double target_h2, double kappa, double sigma_beta2, double trace_over_p)
{
    const double signal = kappa * sigma_beta2 * trace_over_p;
    check_h2_feasible(target_h2, signal);
    if (target_h2 == 0.0)
    {
        // No signal: the noise scale is free, pick unit phenotype variance.
        return 1.0;
    }
    if (target_h2 == 1.0)
    {
        return 0.0;
    }
    return signal * (1.0 - target_h2) / target_h2;
}

double calibrate_noise(
    double target_h2, double kappa, double sigma_beta2, const BlockCovariance& sigma)
{
    return calibrate_noise(
        target_h2, kappa, sigma_beta2, sigma.trace() / static_cast<double>(sigma.dim()));
}

Eigen::MatrixXd sample_design(Eigen::Index rows, const BlockCovariance& sigma_sqrt, Rng& rng)
{
    return sigma_sqrt.right_multiply(standard_normal_matrix(rows, sigma_sqrt.dim(), rng));
}

namespace
{

void check_memory(double elements, double cap)
{
    require(
        elements <= cap,
        ErrorKind::validation,
        "dataset needs " + std::to_string(elements) + " doubles, above max_elements "
            + std::to_string(cap));
}

Dataset assemble(
    Eigen::MatrixXd X,
    Eigen::VectorXd beta,
    Eigen::MatrixXd W,
    double sigma_eps2,
    Rng& rng_noise)
{
    Dataset data;
    const Eigen::VectorXd signal = X * beta;
    const Eigen::VectorXd eps = std::sqrt(sigma_eps2) * standard_normal_vector(X.rows(), rng_noise);
    data.y = signal + eps;
    data.noise = data.y - signal;
    data.X = std::move(X);
    data.beta = std::move(beta);
    data.W = std::move(W);
    data.sigma_eps2 = sigma_eps2;
    return data;
}

}  // namespace

Dataset generate_dataset(const GenConfig& cfg, Rng& rng)
{
    const auto errors = validate(cfg);
    require(errors.empty(), ErrorKind::config, "invalid generator config: " + join(errors));
    check_memory(
        static_cast<double>(cfg.n + cfg.n_w) * static_cast<double>(cfg.p), cfg.max_elements);

    const BlockCovariance sigma = make_covariance(cfg.cov);
    const BlockCovariance root = matrix_sqrt_psd(sigma);
    const double sigma_eps2 = calibrate_noise(cfg.target_h2, cfg.kappa, cfg.sigma_beta2, sigma);

    Eigen::VectorXd beta = sample_effects(cfg, rng);
    Eigen::MatrixXd X = sample_design(cfg.n, root, rng);
    // Noise is drawn before W so that X, beta, y do not depend on n_w.
    Dataset data = assemble(std::move(X), std::move(beta), Eigen::MatrixXd(), sigma_eps2, rng);
    data.W = sample_design(cfg.n_w, root, rng);
    return data;
}

Dataset generate_dataset(const GenConfig& cfg)
{
    Rng rng(cfg.seed);
    return generate_dataset(cfg, rng);
}

std::vector<std::string> validate(const MultiAncestryConfig& cfg)
{
    std::vector<std::string> errors;
    const auto K = static_cast<Eigen::Index>(cfg.K());
    if (K < 1)
    {
        errors.emplace_back("at least one population is required");
        return errors;
    }
    if (cfg.n < 1 || cfg.p < 1 || cfg.n_w < 1)
    {
        errors.emplace_back("n, p, n_w must be >= 1");
    }
    if (cfg.cross.rows() != K || cfg.cross.cols() != K)
    {
        errors.emplace_back("cross covariance must be K x K");
    }
    else
    {
        if (max_asymmetry(cfg.cross) > kSymmetryTolerance * scale_of(cfg.cross))
        {
            errors.emplace_back("cross covariance must be symmetric");
        }
        else
        {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
                cfg.cross, Eigen::EigenvaluesOnly);
            if (solver.eigenvalues().minCoeff() < -kNegativeEigenTolerance * scale_of(cfg.cross))
            {
                errors.emplace_back("cross covariance must be positive semidefinite");
            }
        }
        for (Eigen::Index j = 0; j < K; ++j)
        {
            if (!(cfg.cross(j, j) > 0.0))
            {
                errors.push_back(
                    "cross covariance diagonal entry " + std::to_string(j + 1) + " must be > 0");
            }
        }
    }
    for (std::size_t j = 0; j < cfg.populations.size(); ++j)
    {
        const auto& pop = cfg.populations[j];
        const std::string tag = "population " + std::to_string(j + 1) + ": ";
        if (!(pop.kappa >= 0.0 && pop.kappa <= 1.0))
        {
            errors.push_back(tag + "kappa must lie in [0, 1]");
        }
        if (!(pop.h2 > 0.0 && pop.h2 <= 1.0))
        {
            errors.push_back(tag + "h2 must lie in (0, 1]");
        }
        if (pop.cov.p != cfg.p)
        {
            errors.push_back(tag + "covariance dimension does not match p");
        }
        for (auto& e : validate(pop.cov))
        {
            errors.push_back(tag + e);
        }
    }
    return errors;
}

std::vector<Eigen::VectorXd> sample_multi_effects(const MultiAncestryConfig& cfg, Rng& rng)
{
    const auto errors = validate(cfg);
    require(errors.empty(), ErrorKind::config, "invalid multi-ancestry config: " + join(errors));

    const auto K = static_cast<Eigen::Index>(cfg.K());
    const Eigen::MatrixXd root
        = matrix_sqrt_psd(cfg.cross) / std::sqrt(static_cast<double>(cfg.p));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::bernoulli_distribution> keep;
    for (const auto& pop : cfg.populations)
    {
        keep.emplace_back(pop.kappa);
    }

    std::vector<Eigen::VectorXd> betas(cfg.K(), Eigen::VectorXd(cfg.p));
    Eigen::VectorXd z(K);
    for (Eigen::Index l = 0; l < cfg.p; ++l)
    {
        for (Eigen::Index j = 0; j < K; ++j)
        {
            z(j) = normal(rng);
        }
        const Eigen::VectorXd joint = root * z;
        for (Eigen::Index j = 0; j < K; ++j)
        {
            const auto idx = static_cast<std::size_t>(j);
            betas[idx](l) = keep[idx](rng) ? joint(j) : 0.0;
        }
    }
    return betas;
}

std::vector<Dataset> generate_multi_datasets(const MultiAncestryConfig& cfg, Rng& rng)
{
    check_memory(
        static_cast<double>(cfg.K()) * static_cast<double>(cfg.n + cfg.n_w)
            * static_cast<double>(cfg.p),
        2.0e8);
    auto betas = sample_multi_effects(cfg, rng);
    std::vector<Dataset> out;
    out.reserve(cfg.K());
    for (std::size_t j = 0; j < cfg.K(); ++j)
    {
        const auto& pop = cfg.populations[j];
        const BlockCovariance sigma = make_covariance(pop.cov);
        const BlockCovariance root = matrix_sqrt_psd(sigma);
        const double sjj = cfg.cross(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
        const double sigma_eps2 = calibrate_noise(pop.h2, pop.kappa, sjj, sigma);
        Eigen::MatrixXd X = sample_design(cfg.n, root, rng);
        Dataset data = assemble(std::move(X), std::move(betas[j]), Eigen::MatrixXd(), sigma_eps2, rng);
        data.W = sample_design(cfg.n_w, root, rng);
        out.push_back(std::move(data));
    }
    return out;
}

}  // namespace sumtrain
