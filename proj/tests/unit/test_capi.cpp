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
#include <string>

#include "sumtrain/sumtrain.h"

using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

TEST_CASE("status and exit codes", "[capi]")
{
    CHECK(sumtrain_exit_code(SUMTRAIN_OK) == 0);
    CHECK(sumtrain_exit_code(SUMTRAIN_E_VALIDATION) == 1);
    CHECK(sumtrain_exit_code(SUMTRAIN_E_CONFIG) == 1);
    CHECK(sumtrain_exit_code(SUMTRAIN_E_IO) == 1);
    CHECK(sumtrain_exit_code(SUMTRAIN_E_NUMERICAL) == 2);
    CHECK(std::string(sumtrain_version()).size() > 0);
}

TEST_CASE("closed-form numerics", "[capi]")
{
    double tau = 0.0;
    REQUIRE(sumtrain_identity_tau(1.0, 1.0, &tau) == SUMTRAIN_OK);
    CHECK_THAT(tau, WithinAbs((std::sqrt(5.0) - 1.0) / 2.0, 1e-15));

    const double spectrum[4] = {1.0, 1.0, 1.0, 1.0};
    double solved = 0.0;
    REQUIRE(sumtrain_solve_tau(spectrum, 4, 4.0, 1.0, &solved) == SUMTRAIN_OK);
    CHECK_THAT(solved, WithinAbs(tau, 1e-12));
    double rho = 0.0;
    REQUIRE(sumtrain_compute_rho(spectrum, 4, 4.0, 1.0, solved, &rho) == SUMTRAIN_OK);
    CHECK_THAT(rho, WithinAbs((3.0 - std::sqrt(5.0)) / (2.0 * std::sqrt(5.0)), 1e-12));

    double r2 = 0.0;
    REQUIRE(sumtrain_identity_closed_form_r2(1.0, 1.0, 0.5, 1000, 800, 1000, &r2) == SUMTRAIN_OK);
    CHECK_THAT(r2, WithinAbs(0.493558, 1e-5));

    const sumtrain_theory_inputs inp{800, 200, 1000, 1000, 1.0, 1.0, 0.5};
    REQUIRE(sumtrain_theory_r2_ridge(&inp, nullptr, 0, 1.0, &r2) == SUMTRAIN_OK);
    CHECK_THAT(r2, WithinAbs(0.122014567, 1e-9));

    double w1 = 0.0, w2 = 0.0;
    REQUIRE(sumtrain_optimal_two_pop_weights(2.0, 0.0, 1.0, 3.0, 0.0, &w1, &w2) == SUMTRAIN_OK);
    CHECK(w1 == 1.0);
    CHECK(w2 == 0.0);
}

TEST_CASE("errors carry a message", "[capi]")
{
    double tau = 0.0;
    CHECK(sumtrain_solve_tau(nullptr, 0, 4.0, 1.0, &tau) == SUMTRAIN_E_VALIDATION);
    CHECK(std::string(sumtrain_last_error()).size() > 0);
    const double spectrum[1] = {1.0};
    CHECK(sumtrain_solve_tau(spectrum, 1, 4.0, -1.0, &tau) == SUMTRAIN_E_VALIDATION);
    CHECK(sumtrain_optimal_two_pop_weights(1.0, -1.0, 1.0, 1.0, 1.0, &tau, &tau) == SUMTRAIN_E_NUMERICAL);
    CHECK(sumtrain_summarize("/nonexistent/x.csv", "/nonexistent/y.csv", "/tmp/out.csv") == SUMTRAIN_E_IO);
}

TEST_CASE("configuration handles", "[capi]")
{
    sumtrain_config* cfg = nullptr;
    CHECK(sumtrain_config_parse_string(R"({"version": 1, "data": {"n": 1, "kappa": 9}})", ".", &cfg)
          == SUMTRAIN_E_CONFIG);
    CHECK(cfg == nullptr);
    const std::string errors = sumtrain_last_error();
    CHECK_THAT(errors, ContainsSubstring("data.p"));
    CHECK_THAT(errors, ContainsSubstring("data.kappa"));

    const char* text = R"({"version": 1, "seed": 3, "replicates": 2,
        "data": {"n": 120, "p": 40, "n_w": 60},
        "estimator": {"theta_grid": [0.1, 1.0]}})";
    REQUIRE(sumtrain_config_parse_string(text, ".", &cfg) == SUMTRAIN_OK);
    REQUIRE(sumtrain_config_set_seed(cfg, 11) == SUMTRAIN_OK);
    std::uint64_t seed = 0;
    sumtrain_config_get_seed(cfg, &seed);
    CHECK(seed == 11);

    char* serialized = nullptr;
    REQUIRE(sumtrain_config_serialize(cfg, &serialized) == SUMTRAIN_OK);
    sumtrain_config* again = nullptr;
    REQUIRE(sumtrain_config_parse_string(serialized, ".", &again) == SUMTRAIN_OK);
    int equal = 0;
    sumtrain_config_equal(cfg, again, &equal);
    CHECK(equal == 1);
    sumtrain_string_free(serialized);

    sumtrain_table* t1 = nullptr;
    sumtrain_table* t2 = nullptr;
    REQUIRE(sumtrain_run_sweep(cfg, &t1) == SUMTRAIN_OK);
    REQUIRE(sumtrain_run_sweep(again, &t2) == SUMTRAIN_OK);
    CHECK(sumtrain_table_size(t1) == 6);
    char* csv1 = nullptr;
    char* csv2 = nullptr;
    sumtrain_table_csv(t1, &csv1);
    sumtrain_table_csv(t2, &csv2);
    CHECK(std::string(csv1) == std::string(csv2));
    sumtrain_row row{};
    REQUIRE(sumtrain_table_row(t1, 0, &row) == SUMTRAIN_OK);
    CHECK(std::string(row.mode) == "sum");
    CHECK(row.n_replicates == 2);
    CHECK(sumtrain_table_row(t1, 99, &row) == SUMTRAIN_E_VALIDATION);

    sumtrain_string_free(csv1);
    sumtrain_string_free(csv2);
    sumtrain_table_free(t1);
    sumtrain_table_free(t2);
    sumtrain_config_free(again);
    sumtrain_config_free(cfg);
}
