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

#include "sumtrain/summary.hpp"

#include <cmath>

#include "sumtrain/error.hpp"
#include "sumtrain/model_gen.hpp"

namespace sumtrain
{

SummaryStats compute_summary(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::string label)
{
    require(X.rows() == y.size(), ErrorKind::validation, "compute_summary: X rows != length(y)");
    require(X.rows() >= 1 && X.cols() >= 1, ErrorKind::validation, "compute_summary: empty X");
    SummaryStats stats;
    stats.s.noalias() = X.transpose() * y;
    stats.n = X.rows();
    const double norm2 = y.squaredNorm();
    if (norm2 > 0.0)
    {
        stats.y_norm2 = norm2;
    }
    stats.label = std::move(label);
    return stats;
}

LDReference LDReference::from_panel(const Eigen::MatrixXd& W)
{
    require(W.rows() >= 1 && W.cols() >= 1, ErrorKind::validation, "empty reference panel");
    LDReference ld;
    ld.G = Eigen::MatrixXd::Zero(W.cols(), W.cols());
    ld.G.selfadjointView<Eigen::Lower>().rankUpdate(W.transpose());
    ld.G = ld.G.selfadjointView<Eigen::Lower>();
    ld.n_w = W.rows();
    return ld;
}

void validate(const LDReference& ld)
{
    require(ld.n_w >= 1, ErrorKind::validation, "LD reference needs n_w >= 1");
    require(
        ld.G.rows() == ld.G.cols() && ld.G.rows() >= 1,
        ErrorKind::validation,
        "LD matrix must be square and nonempty");
    require(ld.G.allFinite(), ErrorKind::validation, "LD matrix has non-finite entries");
    const double asym = (ld.G - ld.G.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, ld.G.cwiseAbs().maxCoeff());
    require(
        asym <= 1e-8 * scale,
        ErrorKind::validation,
        "LD matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
}

XtYCovariance XtYCovariance::oracle(
    const SummaryStats& stats, const BlockCovariance& sigma, const Eigen::VectorXd& beta)
{
    require(
        sigma.dim() == stats.p() && beta.size() == stats.p(),
        ErrorKind::validation,
        "oracle covariance: dimension mismatch");
    XtYCovariance cov;
    cov.mode_ = Mode::oracle;
    cov.dim_ = stats.p();
    cov.v_ = stats.s - static_cast<double>(stats.n) * sigma.multiply(beta);
    return cov;
}

XtYCovariance XtYCovariance::expected(
    Eigen::Index n, const BlockCovariance& sigma, const Eigen::VectorXd& beta, double sigma_eps2)
{
    require(beta.size() == sigma.dim(), ErrorKind::validation, "expected covariance: dimension mismatch");
    require(n >= 1 && sigma_eps2 >= 0.0, ErrorKind::validation, "expected covariance: bad n or noise");
    XtYCovariance cov;
    cov.mode_ = Mode::expected;
    cov.dim_ = sigma.dim();
    const double root_n = std::sqrt(static_cast<double>(n));
    cov.scale_ = root_n * std::sqrt(sigma.quadratic_form(beta) + sigma_eps2);
    cov.v_ = root_n * sigma.multiply(beta);
    cov.sigma_root_ = matrix_sqrt_psd(sigma);
    return cov;
}

XtYCovariance XtYCovariance::plugin(double c, const Eigen::MatrixXd& m)
{
    require(c >= 0.0 && std::isfinite(c), ErrorKind::validation, "plugin scale must be >= 0");
    XtYCovariance cov;
    cov.mode_ = Mode::plugin;
    cov.dim_ = m.rows();
    cov.scale_ = std::sqrt(c);
    cov.root_ = matrix_sqrt_psd(m);
    return cov;
}

XtYCovariance XtYCovariance::plugin_factor(double c, Eigen::MatrixXd factor)
{
    require(c >= 0.0 && std::isfinite(c), ErrorKind::validation, "plugin scale must be >= 0");
    XtYCovariance cov;
    cov.mode_ = Mode::plugin;
    cov.dim_ = factor.cols();
    cov.scale_ = std::sqrt(c);
    cov.factor_ = std::move(factor);
    return cov;
}

namespace
{

Eigen::VectorXd draw(Eigen::Index size, Rng& rng, ResampleNoise noise)
{
    return noise == ResampleNoise::gaussian ? standard_normal_vector(size, rng)
                                            : rademacher_vector(size, rng);
}

}  // namespace

Eigen::VectorXd XtYCovariance::sample_root(Rng& rng, ResampleNoise noise) const
{
    switch (mode_)
    {
        case Mode::oracle:
            return v_ * draw(1, rng, noise)(0);
        case Mode::expected:
        {
            const Eigen::VectorXd h = draw(dim_, rng, noise);
            const double z = draw(1, rng, noise)(0);
            return scale_ * sigma_root_.multiply(h) + z * v_;
        }
        case Mode::plugin:
            if (factor_.size() > 0)
            {
                return scale_ * (factor_.transpose() * draw(factor_.rows(), rng, noise));
            }
            return scale_ * (root_ * draw(dim_, rng, noise));
    }
    fail(ErrorKind::validation, "unknown covariance mode");
}

Eigen::Index train_size(Eigen::Index n, double ratio)
{
    require(ratio > 0.0 && ratio < 1.0, ErrorKind::validation, "split ratio must lie in (0, 1)");
    require(n >= 2, ErrorKind::validation, "splitting needs n >= 2");
    const auto n_train = static_cast<Eigen::Index>(std::nearbyint(ratio * static_cast<double>(n)));
    require(
        n_train >= 1 && n_train <= n - 1,
        ErrorKind::validation,
        "split ratio leaves an empty side for n = " + std::to_string(n));
    return n_train;
}

PseudoSplit pseudo_split(
    const SummaryStats& stats, const XtYCovariance& cov, double ratio, Rng& rng, ResampleNoise noise)
{
    require(cov.dim() == stats.p(), ErrorKind::validation, "pseudo_split: covariance dimension mismatch");
    PseudoSplit split;
    split.n_train = train_size(stats.n, ratio);
    split.n_valid = stats.n - split.n_train;
    const auto n = static_cast<double>(stats.n);
    const auto nt = static_cast<double>(split.n_train);
    const auto nv = static_cast<double>(split.n_valid);
    split.s_train = (nt / n) * stats.s + std::sqrt(nt * nv / (n * n)) * cov.sample_root(rng, noise);
    split.s_valid = stats.s - split.s_train;
    return split;
}

IndividualSplit individual_split(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double ratio, Rng& rng)
{
    require(X.rows() == y.size(), ErrorKind::validation, "individual_split: X rows != length(y)");
    require(ratio > 0.0 && ratio < 1.0, ErrorKind::validation, "split ratio must lie in (0, 1)");
    require(X.rows() >= 2, ErrorKind::validation, "splitting needs n >= 2");

    const Eigen::Index n = X.rows();
    std::bernoulli_distribution coin(ratio);
    IndividualSplit split;
    split.mask.assign(static_cast<std::size_t>(n), false);
    while (split.train_rows.empty() || split.valid_rows.empty())
    {
        split.train_rows.clear();
        split.valid_rows.clear();
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const bool train = coin(rng);
            split.mask[static_cast<std::size_t>(i)] = train;
            (train ? split.train_rows : split.valid_rows).push_back(i);
        }
    }
    split.X_train = X(split.train_rows, Eigen::all);
    split.y_train = y(split.train_rows);
    split.X_valid = X(split.valid_rows, Eigen::all);
    split.y_valid = y(split.valid_rows);
    return split;
}

}  // namespace sumtrain
