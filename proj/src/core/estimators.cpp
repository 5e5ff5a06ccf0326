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

#include "sumtrain/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "sumtrain/error.hpp"

namespace sumtrain
{

namespace
{

void check_theta(double theta)
{
    require(theta > 0.0 && std::isfinite(theta), ErrorKind::validation, "ridge theta must be > 0");
}

std::vector<Eigen::Index> normalized_selection(std::vector<Eigen::Index> selected, Eigen::Index p)
{
    require(!selected.empty(), ErrorKind::validation, "threshold selection is empty");
    std::sort(selected.begin(), selected.end());
    selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
    require(
        selected.front() >= 0 && selected.back() < p,
        ErrorKind::validation,
        "threshold selection index out of range");
    return selected;
}

const LDReference& need_reference(const LDReference* ld)
{
    require(ld != nullptr, ErrorKind::config, "ridge rule needs an LD reference");
    return *ld;
}

}  // namespace

Eigen::VectorXd ridge_fit(const Eigen::VectorXd& s_train, const LDReference& ld, double theta)
{
    check_theta(theta);
    require(
        ld.G.rows() == s_train.size() && ld.G.cols() == s_train.size(),
        ErrorKind::validation,
        "ridge_fit: LD dimension mismatch");
    const auto n_w = static_cast<double>(ld.n_w);

    Eigen::MatrixXd system = ld.G;
    system.diagonal().array() += theta * n_w;
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success)
    {
        system.diagonal().array() += 1e-10 * n_w;
        llt.compute(system);
    }
    require(llt.info() == Eigen::Success, ErrorKind::numerical, "ridge_fit: factorization failed");
    Eigen::VectorXd beta = llt.solve(s_train);
    require(beta.allFinite(), ErrorKind::numerical, "ridge_fit: non-finite solution");
    return beta;
}

Eigen::VectorXd threshold_fit(const Eigen::VectorXd& s_train, const std::vector<Eigen::Index>& selected)
{
    const auto set = normalized_selection(selected, s_train.size());
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(s_train.size());
    for (const auto i : set)
    {
        beta(i) = s_train(i);
    }
    return beta;
}

Eigen::VectorXd custom_fit(const Eigen::MatrixXd& A, const Eigen::VectorXd& s_train)
{
    require(A.cols() == s_train.size(), ErrorKind::validation, "custom_fit: dimension mismatch");
    require(A.allFinite(), ErrorKind::validation, "custom_fit: non-finite matrix");
    return A * s_train;
}

Eigen::VectorXd fit(const LinearRule& rule, const Eigen::VectorXd& s_train, const LDReference* ld)
{
    if (const auto* r = std::get_if<RidgeRule>(&rule))
    {
        return ridge_fit(s_train, need_reference(ld), r->theta);
    }
    if (const auto* t = std::get_if<ThresholdRule>(&rule))
    {
        return threshold_fit(s_train, t->indices);
    }
    return custom_fit(std::get<CustomRule>(rule).A, s_train);
}

Eigen::MatrixXd explicit_matrix(const LinearRule& rule, Eigen::Index p, const LDReference* ld)
{
    if (const auto* r = std::get_if<RidgeRule>(&rule))
    {
        const auto& ref = need_reference(ld);
        check_theta(r->theta);
        require(ref.G.rows() == p, ErrorKind::validation, "explicit_matrix: LD dimension mismatch");
        Eigen::MatrixXd system = ref.G;
        system.diagonal().array() += r->theta * static_cast<double>(ref.n_w);
        return system.llt().solve(Eigen::MatrixXd::Identity(p, p));
    }
    if (const auto* t = std::get_if<ThresholdRule>(&rule))
    {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
        for (const auto i : normalized_selection(t->indices, p))
        {
            A(i, i) = 1.0;
        }
        return A;
    }
    const auto& A = std::get<CustomRule>(rule).A;
    require(A.rows() == p && A.cols() == p, ErrorKind::validation, "custom rule must be p x p");
    return A;
}

std::vector<Eigen::Index> marginal_ranking(const Eigen::VectorXd& s, const Eigen::VectorXd& g_diag)
{
    require(s.size() == g_diag.size(), ErrorKind::validation, "marginal_ranking: dimension mismatch");
    Eigen::VectorXd score(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
    {
        score(i) = g_diag(i) > 0.0 ? std::abs(s(i)) / std::sqrt(g_diag(i)) : -1.0;
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(s.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(
        order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return score(a) > score(b); });
    return order;
}

std::vector<Eigen::Index> top_k(const std::vector<Eigen::Index>& ranking, Eigen::Index k)
{
    require(
        k >= 1 && static_cast<std::size_t>(k) <= ranking.size(),
        ErrorKind::validation,
        "top_k: k must lie in [1, p]");
    return {ranking.begin(), ranking.begin() + k};
}

RidgeSolver RidgeSolver::from_reference(const LDReference& ld)
{
    validate(ld);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ld.G);
    require(eig.info() == Eigen::Success, ErrorKind::numerical, "LD eigendecomposition failed");
    RidgeSolver solver;
    solver.p_ = ld.G.rows();
    solver.n_w_ = ld.n_w;
    solver.Q_ = eig.eigenvectors().transpose();
    solver.lambda_ = eig.eigenvalues().cwiseMax(0.0);
    solver.g_diag_ = ld.G.diagonal();
    return solver;
}

RidgeSolver RidgeSolver::from_panel(const Eigen::MatrixXd& W)
{
    require(W.rows() >= 1 && W.cols() >= 1, ErrorKind::validation, "empty reference panel");
    if (W.cols() <= W.rows())
    {
        return from_reference(LDReference::from_panel(W));
    }
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(W.rows(), W.rows());
    K.selfadjointView<Eigen::Lower>().rankUpdate(W);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    require(eig.info() == Eigen::Success, ErrorKind::numerical, "panel eigendecomposition failed");

    const Eigen::VectorXd& values = eig.eigenvalues();
    const double cutoff = 1e-12 * std::max(values.maxCoeff(), 0.0);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < values.size(); ++i)
    {
        if (values(i) > cutoff)
        {
            keep.push_back(i);
        }
    }

    RidgeSolver solver;
    solver.p_ = W.cols();
    solver.n_w_ = W.rows();
    solver.lambda_ = values(keep);
    const Eigen::MatrixXd U = eig.eigenvectors()(Eigen::all, keep);
    solver.Q_.noalias() = U.transpose() * W;
    solver.Q_.array().colwise() /= solver.lambda_.array().sqrt();
    solver.g_diag_ = W.colwise().squaredNorm().transpose();
    return solver;
}

Eigen::VectorXd RidgeSolver::project(const Eigen::VectorXd& s) const
{
    require(s.size() == p_, ErrorKind::validation, "RidgeSolver: dimension mismatch");
    return Q_ * s;
}

Eigen::VectorXd RidgeSolver::solve(
    const Eigen::VectorXd& s, const Eigen::VectorXd& projected, double theta) const
{
    check_theta(theta);
    const double c = theta * static_cast<double>(n_w_);
    const Eigen::VectorXd weights
        = (projected.array() * lambda_.array() / (c * (lambda_.array() + c))).matrix();
    Eigen::VectorXd beta = s / c;
    beta.noalias() -= Q_.transpose() * weights;
    require(beta.allFinite(), ErrorKind::numerical, "RidgeSolver: non-finite solution");
    return beta;
}

Eigen::VectorXd RidgeSolver::solve(const Eigen::VectorXd& s, double theta) const
{
    return solve(s, project(s), theta);
}

Eigen::VectorXd ensemble_fit(const EnsembleRule& rule, const Eigen::VectorXd& s_train, const LDReference* ld)
{
    require(!rule.components.empty(), ErrorKind::validation, "ensemble needs at least one component");
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(s_train.size());
    for (const auto& component : rule.components)
    {
        require(std::isfinite(component.weight), ErrorKind::validation, "ensemble weight not finite");
        const Eigen::VectorXd part = fit(component.rule, s_train, ld);
        require(part.size() == beta.size(), ErrorKind::validation, "ensemble: mixed dimensions");
        beta += component.weight * part;
    }
    return beta;
}

Eigen::VectorXd multi_fit(const MultiAncestryRule& rule, const std::vector<Eigen::VectorXd>& s_train)
{
    require(!rule.populations.empty(), ErrorKind::validation, "multi_fit needs a population");
    require(
        rule.populations.size() == s_train.size(),
        ErrorKind::validation,
        "multi_fit: population count mismatch");
    const Eigen::Index p = s_train.front().size();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (std::size_t j = 0; j < s_train.size(); ++j)
    {
        const auto& pop = rule.populations[j];
        require(s_train[j].size() == p, ErrorKind::validation, "multi_fit: mixed dimensions");
        require(std::isfinite(pop.weight), ErrorKind::validation, "population weight not finite");
        beta += pop.weight * fit(pop.rule, s_train[j], &pop.ld);
    }
    return beta;
}

}  // namespace sumtrain
