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

/* C interface to the sumtrain library. All functions return a status; the
 * message of the most recent failure on the calling thread is available
 * from sumtrain_last_error(). Strings returned through char** are owned by
 * the caller and released with sumtrain_string_free(). */

#ifndef SUMTRAIN_H
#define SUMTRAIN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SUMTRAIN_BUILDING)
#    define SUMTRAIN_API __declspec(dllexport)
#  else
#    define SUMTRAIN_API __declspec(dllimport)
#  endif
#else
#  define SUMTRAIN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sumtrain_status
{
    SUMTRAIN_OK = 0,
    SUMTRAIN_E_VALIDATION = 1,
    SUMTRAIN_E_CONFIG = 2,
    SUMTRAIN_E_NUMERICAL = 3,
    SUMTRAIN_E_IO = 4,
    SUMTRAIN_E_ARGUMENT = 5,
    SUMTRAIN_E_INTERNAL = 6
} sumtrain_status;

SUMTRAIN_API const char* sumtrain_version(void);
SUMTRAIN_API const char* sumtrain_last_error(void);
SUMTRAIN_API const char* sumtrain_status_name(sumtrain_status status);
/* Process exit code: 0 ok, 2 numerical, 1 otherwise. */
SUMTRAIN_API int sumtrain_exit_code(sumtrain_status status);
SUMTRAIN_API void sumtrain_string_free(char* text);

/* ---- configuration -------------------------------------------------- */

typedef struct sumtrain_config sumtrain_config;

/* On failure *out is NULL and sumtrain_last_error() lists every problem,
 * one per line. */
SUMTRAIN_API sumtrain_status sumtrain_config_parse_file(const char* path, sumtrain_config** out);
SUMTRAIN_API sumtrain_status sumtrain_config_parse_string(
    const char* text, const char* base_dir, sumtrain_config** out);
SUMTRAIN_API void sumtrain_config_free(sumtrain_config* config);

SUMTRAIN_API sumtrain_status sumtrain_config_set_seed(sumtrain_config* config, uint64_t seed);
SUMTRAIN_API sumtrain_status sumtrain_config_get_seed(const sumtrain_config* config, uint64_t* seed);
SUMTRAIN_API sumtrain_status sumtrain_config_set_replicates(sumtrain_config* config, int replicates);
SUMTRAIN_API sumtrain_status sumtrain_config_set_output(sumtrain_config* config, const char* path);
/* Empty string when the file names no output. */
SUMTRAIN_API sumtrain_status sumtrain_config_get_output(const sumtrain_config* config, char** path);
SUMTRAIN_API sumtrain_status sumtrain_config_serialize(const sumtrain_config* config, char** text);
SUMTRAIN_API sumtrain_status sumtrain_config_equal(
    const sumtrain_config* a, const sumtrain_config* b, int* equal);

/* ---- experiment tables ---------------------------------------------- */

typedef struct sumtrain_table sumtrain_table;

typedef struct sumtrain_row
{
    const char* setting_id;
    const char* hyperparameter;
    const char* mode;
    double mean;
    double se;
    int n_replicates;
    uint64_t seed;
} sumtrain_row;

SUMTRAIN_API sumtrain_status sumtrain_run_sweep(const sumtrain_config* config, sumtrain_table** out);
SUMTRAIN_API sumtrain_status sumtrain_run_parity(const sumtrain_config* config, sumtrain_table** out);
SUMTRAIN_API sumtrain_status sumtrain_run_ratio(const sumtrain_config* config, sumtrain_table** out);
SUMTRAIN_API sumtrain_status sumtrain_run_multi(const sumtrain_config* config, sumtrain_table** out);
SUMTRAIN_API sumtrain_status sumtrain_run_ensemble(const sumtrain_config* config, sumtrain_table** out);

SUMTRAIN_API size_t sumtrain_table_size(const sumtrain_table* table);
/* Pointers in *row stay valid until the table is freed. */
SUMTRAIN_API sumtrain_status sumtrain_table_row(const sumtrain_table* table, size_t index, sumtrain_row* row);
SUMTRAIN_API sumtrain_status sumtrain_table_csv(const sumtrain_table* table, char** text);
SUMTRAIN_API sumtrain_status sumtrain_table_write_csv(const sumtrain_table* table, const char* path);
SUMTRAIN_API void sumtrain_table_free(sumtrain_table* table);

/* ---- file workflows ------------------------------------------------- */

/* Writes X.csv, y.csv, beta.csv, W.csv and covariance.json into out_dir. */
SUMTRAIN_API sumtrain_status sumtrain_generate(const sumtrain_config* config, const char* out_dir);
/* Summary file (X'y, n, |y|^2) from individual-level X and y. */
SUMTRAIN_API sumtrain_status sumtrain_summarize(const char* x_path, const char* y_path, const char* out_path);
/* LD file (W'W with n_w) from a panel matrix. */
SUMTRAIN_API sumtrain_status sumtrain_ld_from_panel(const char* w_path, const char* out_path);

typedef enum sumtrain_noise
{
    SUMTRAIN_NOISE_GAUSSIAN = 0,
    SUMTRAIN_NOISE_RADEMACHER = 1
} sumtrain_noise;

/* Pseudo split of a summary file, perturbed with covariance
 * |y|^2 G / n_w from the LD file. Both outputs carry |y|^2 entries. */
SUMTRAIN_API sumtrain_status sumtrain_split(
    const char* summary_path,
    const char* ld_path,
    double ratio,
    uint64_t seed,
    sumtrain_noise noise,
    const char* train_out,
    const char* valid_out);

typedef enum sumtrain_family
{
    SUMTRAIN_FAMILY_RIDGE = 0,
    SUMTRAIN_FAMILY_THRESHOLD = 1
} sumtrain_family;

/* Ridge with theta = value, or top-k with k = value. */
SUMTRAIN_API sumtrain_status sumtrain_fit(
    const char* summary_path, const char* ld_path, sumtrain_family family, double value, const char* out_path);

/* Scores each grid value on the validation summary, using G / n_w as the
 * covariance. Writes a results table; *best receives the chosen value. */
SUMTRAIN_API sumtrain_status sumtrain_tune(
    const char* train_path,
    const char* valid_path,
    const char* ld_path,
    sumtrain_family family,
    const double* grid,
    size_t grid_size,
    const char* out_path,
    double* best);

/* ---- closed-form numerics (no randomness) --------------------------- */

SUMTRAIN_API sumtrain_status sumtrain_solve_tau(
    const double* spectrum, size_t size, double n, double theta, double* tau);
SUMTRAIN_API sumtrain_status sumtrain_compute_rho(
    const double* spectrum, size_t size, double n, double theta, double tau, double* rho);
SUMTRAIN_API sumtrain_status sumtrain_identity_tau(double gamma, double theta, double* tau);
SUMTRAIN_API sumtrain_status sumtrain_identity_rho(double gamma, double theta, double* rho);

typedef struct sumtrain_theory_inputs
{
    double n_train;
    double n_valid;
    double n_w;
    double p;
    double kappa;
    double sigma_beta2;
    double h2;
} sumtrain_theory_inputs;

/* Ridge theory R^2 with unit-variance prefactor. spectrum == NULL means
 * the identity covariance of dimension p. */
SUMTRAIN_API sumtrain_status sumtrain_theory_r2_ridge(
    const sumtrain_theory_inputs* inputs, const double* spectrum, size_t size, double theta, double* r2);
/* (theta + tau)/(rho + 1) * n_w / (p/h2 + n_train), gamma_w = p / n_w. */
SUMTRAIN_API sumtrain_status sumtrain_identity_closed_form_r2(
    double theta, double gamma_w, double h2, double p, double n_train, double n_w, double* r2);
SUMTRAIN_API sumtrain_status sumtrain_optimal_two_pop_weights(
    double N1, double N2, double D1, double D2, double D3, double* omega1, double* omega2);

#ifdef __cplusplus
}
#endif

#endif /* SUMTRAIN_H */
