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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <set>

#include "sumtrain/error.hpp"
#include "sumtrain/harness.hpp"

using namespace sumtrain;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{

ExperimentConfig small_config()
{
    ExperimentConfig cfg;
    cfg.gen.n = 200;
    cfg.gen.p = 100;
    cfg.gen.n_w = 80;
    cfg.gen.kappa = 0.5;
    cfg.gen.target_h2 = 0.6;
    cfg.gen.cov.kind = CovarianceKind::block_ar1;
    cfg.gen.cov.p = 100;
    cfg.gen.cov.n_block = 5;
    cfg.gen.cov.rho = 0.5;
    cfg.estimator.theta_grid = {0.01, 0.1, 1.0};
    cfg.estimator.threshold = true;
    cfg.estimator.k_grid = {5, 20, 100};
    cfg.replicates = 4;
    cfg.seed = 99;
    return cfg;
}

}  // namespace

TEST_CASE("mean and standard error", "[harness]")
{
    const auto m = mean_se({1.0, 2.0, 3.0});
    CHECK_THAT(m.mean, WithinAbs(2.0, 1e-15));
    CHECK_THAT(m.se, WithinAbs(1.0 / std::sqrt(3.0), 1e-15));
    CHECK(m.count == 3);

    const auto nan = mean_se({1.0, std::numeric_limits<double>::quiet_NaN(), 3.0});
    CHECK(nan.count == 2);
    CHECK(nan.degenerate == 1);
    CHECK_THAT(nan.mean, WithinAbs(2.0, 1e-15));

    const auto one = mean_se({0.7});
    CHECK(one.se == 0.0);
}

TEST_CASE("default top-k grid", "[harness]")
{
    const auto g = default_k_grid(2000);
    CHECK(g.front() == 1);
    CHECK(g.back() == 2000);
    CHECK(std::set<Eigen::Index>(g.begin(), g.end()).size() == g.size());
    CHECK(std::is_sorted(g.begin(), g.end()));
    CHECK(g.size() >= 20);
    CHECK(g.size() <= 25);
    CHECK(default_k_grid(3) == std::vector<Eigen::Index>{1, 2, 3});
}

TEST_CASE("parallel failures name the lowest replicate", "[harness]")
{
    try
    {
        parallel_for(8, 5, [](std::size_t i) {
            if (i == 3 || i == 6)
            {
                fail(ErrorKind::numerical, "boom");
            }
        });
        FAIL("expected a failure");
    }
    catch (const Error& e)
    {
        CHECK(e.kind() == ErrorKind::numerical);
        const std::string msg = e.what();
        CHECK(msg.find("replicate 3") != std::string::npos);
        CHECK(msg.find(std::to_string(derive_seed(5, 3))) != std::string::npos);
    }
}

TEST_CASE("sweep is deterministic and well formed", "[harness]")
{
    const auto cfg = small_config();
    const auto a = run_sweep(cfg);
    const auto b = run_sweep(cfg);
    REQUIRE(a.curves.size() == 2);
    CHECK(a.curves[0].pseudo == b.curves[0].pseudo);
    CHECK(a.curves[1].individual == b.curves[1].individual);

    const auto rows = a.rows();
    // ridge: 3 grid points x (sum, ind, theory); threshold: 3 x (sum, ind).
    CHECK(rows.size() == 15);
    CHECK(rows[0].setting_id == "sweep/ridge");
    CHECK(rows[0].mode == "sum");
    CHECK(rows[0].n_replicates == 4);
    CHECK(rows[2].mode == "theory");
    for (const auto& r : rows)
    {
        CHECK(std::isfinite(r.mean));
    }
}

TEST_CASE("single replicate, single grid point", "[harness]")
{
    auto cfg = small_config();
    cfg.replicates = 1;
    cfg.estimator.threshold = false;
    cfg.estimator.theta_grid = {1.0};
    cfg.modes = {true, false, false, false};
    const auto rows = run_sweep(cfg).rows();
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].se == 0.0);
    CHECK(rows[0].n_replicates == 1);
}

TEST_CASE("hold-out scores", "[harness]")
{
    auto cfg = small_config();
    cfg.estimator.threshold = false;
    cfg.estimator.theta_grid = {0.5};
    cfg.modes = {false, false, false, true};
    cfg.n_test = 300;
    const auto res = run_sweep(cfg);
    for (const double v : res.curves[0].holdout_pseudo)
    {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(res.rows().back().mode == "holdout_ind");
}

TEST_CASE("parity settings grid", "[harness]")
{
    ParityConfig cfg;
    cfg.base = small_config();
    cfg.base.estimator.threshold = false;
    cfg.base.replicates = 2;
    cfg.h2_values = {0.3, 0.7};
    const auto res = run_parity(cfg);
    REQUIRE(res.settings.size() == 2);
    CHECK(res.settings[0].id.find(',') == std::string::npos);
    CHECK(res.settings[0].holdout_pseudo.count == 2);
}

TEST_CASE("ratio convergence bookkeeping", "[harness]")
{
    RatioConfig cfg;
    cfg.base = small_config();
    cfg.base.replicates = 3;
    cfg.n_values = {200, 400};
    cfg.thetas = {0.1, 1.0};
    const auto res = run_ratio_convergence(cfg);
    CHECK(res.points.size() == 4);
    CHECK(std::isfinite(res.deviation(400)));
    CHECK(res.rows().size() == 4);
}

TEST_CASE("invalid experiments are rejected", "[harness]")
{
    auto cfg = small_config();
    cfg.split_ratio = 1.5;
    cfg.replicates = 0;
    const auto errors = validate(cfg);
    CHECK(errors.size() >= 2);
    CHECK_THROWS_AS(run_sweep(cfg), Error);
}

TEST_CASE("multi-population study with independent effects favours the target", "[harness]")
{
    MultiExperimentConfig cfg;
    cfg.data.n = 300;
    cfg.data.p = 60;
    cfg.data.n_w = 100;
    PopulationSpec pop;
    pop.cov.p = 60;
    pop.kappa = 1.0;
    pop.h2 = 0.8;
    cfg.data.populations = {pop, pop};
    cfg.data.cross = Eigen::Matrix2d::Identity();
    cfg.thetas = {0.5, 0.5};
    cfg.weight_step = 0.1;
    cfg.replicates = 4;
    cfg.seed = 3;
    const auto res = run_multi_experiment(cfg);
    CHECK(res.omega_grid.size() == 11);
    CHECK(res.closed_form_omega1 == 1.0);
    CHECK(res.pseudo.size() == 4);
}
