/*
 * C interface to the doubly sparse dictionary learning library.
 *
 * All objects are opaque handles owned by the caller and released with the
 * matching *_free function. Functions return a dsdl_status; on failure a
 * message for the calling thread is available from dsdl_last_error().
 * Matrices are exchanged column-major.
 */
#ifndef DSDL_DSDL_H
#define DSDL_DSDL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DSDL_BUILDING)
#    define DSDL_API __declspec(dllexport)
#  else
#    define DSDL_API __declspec(dllimport)
#  endif
#else
#  define DSDL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dsdl_status {
  DSDL_OK = 0,
  DSDL_ERR_INVALID_ARGUMENT = 1,
  DSDL_ERR_CONFIG = 2,
  DSDL_ERR_IO = 3,
  DSDL_ERR_PARSE = 4,
  DSDL_ERR_SHAPE_MISMATCH = 5,
  DSDL_ERR_DIMENSION_MISMATCH = 6,
  DSDL_ERR_ALL_WEIGHTS_ZERO = 7,
  DSDL_ERR_ZERO_NORM_VECTOR = 8,
  DSDL_ERR_ZERO_DATA_NORM = 9,
  DSDL_ERR_RANK_DEFICIENT = 10,
  DSDL_ERR_SPEC_INVALID = 11,
  DSDL_ERR_NUMERICAL = 12,
  DSDL_ERR_INTERNAL = 13
} dsdl_status;

DSDL_API const char* dsdl_status_name(dsdl_status status);
/* Message of the last failure on this thread; empty if none. */
DSDL_API const char* dsdl_last_error(void);
DSDL_API const char* dsdl_version(void);
DSDL_API void dsdl_string_free(char* s);

/* ---- matrices ---------------------------------------------------------- */

typedef struct dsdl_matrix dsdl_matrix;

/* `values` may be NULL for a zero matrix; otherwise rows*cols doubles. */
DSDL_API dsdl_status dsdl_matrix_create(size_t rows, size_t cols, const double* values,
                                        dsdl_matrix** out);
DSDL_API dsdl_status dsdl_matrix_clone(const dsdl_matrix* m, dsdl_matrix** out);
DSDL_API void dsdl_matrix_free(dsdl_matrix* m);
DSDL_API size_t dsdl_matrix_rows(const dsdl_matrix* m);
DSDL_API size_t dsdl_matrix_cols(const dsdl_matrix* m);
DSDL_API const double* dsdl_matrix_data(const dsdl_matrix* m);
DSDL_API dsdl_status dsdl_matrix_load_csv(const char* path, dsdl_matrix** out);
DSDL_API dsdl_status dsdl_matrix_save_csv(const dsdl_matrix* m, const char* path);

/* ---- configuration ------------------------------------------------------ */

typedef struct dsdl_config dsdl_config;

DSDL_API dsdl_status dsdl_config_create(dsdl_config** out);
/* Strict: unknown keys and wrong types are rejected. */
DSDL_API dsdl_status dsdl_config_from_json(const char* json_text, dsdl_config** out);
DSDL_API void dsdl_config_free(dsdl_config* cfg);
/* Dotted key (e.g. "kaczmarz.ridge_lambda"); value is JSON text or a bare string. */
DSDL_API dsdl_status dsdl_config_set(dsdl_config* cfg, const char* key, const char* value);
/* Fully merged configuration as JSON; free with dsdl_string_free. */
DSDL_API dsdl_status dsdl_config_to_json(const dsdl_config* cfg, char** out_json);
/* Resolved path settings: "data_in", "model_out", "trace_out", "report_out", "bench_out". */
DSDL_API const char* dsdl_config_path(const dsdl_config* cfg, const char* which);
/* Shot budgets for benchmarking; 0 stands for the exact oracle. */
DSDL_API size_t dsdl_config_bench_budget_count(const dsdl_config* cfg);
DSDL_API int64_t dsdl_config_bench_budget(const dsdl_config* cfg, size_t index);
/* Human-readable table of every key, its default and meaning. */
DSDL_API const char* dsdl_config_help(void);

/* ---- synthetic instances ----------------------------------------------- */

typedef struct dsdl_instance dsdl_instance;

DSDL_API dsdl_status dsdl_synthesize(const dsdl_config* cfg, dsdl_instance** out);
DSDL_API void dsdl_instance_free(dsdl_instance* inst);
/* Borrowed views valid for the lifetime of the instance. */
DSDL_API const dsdl_matrix* dsdl_instance_data(const dsdl_instance* inst);
DSDL_API const dsdl_matrix* dsdl_instance_basis(const dsdl_instance* inst);
DSDL_API const dsdl_matrix* dsdl_instance_true_coefficients(const dsdl_instance* inst);
DSDL_API const dsdl_matrix* dsdl_instance_true_codes(const dsdl_instance* inst);
/* Writes Y.csv, phi.csv, A_true.csv and X_true.csv into `dir` (created if missing). */
DSDL_API dsdl_status dsdl_instance_save(const dsdl_instance* inst, const char* dir);

/* ---- training ------------------------------------------------------------ */

typedef struct dsdl_model dsdl_model;

typedef struct dsdl_trace_row {
  int32_t iter;
  double rel_error;
  double code_sparsity;
  double coef_sparsity;
  uint64_t oracle_calls;
  int32_t dead_atoms;
} dsdl_trace_row;

/*
 * Runs the alternating trainer. When training fails after it started
 * (e.g. DSDL_ERR_NUMERICAL) *out is still set to a model holding the partial
 * trace; its coefficient and code matrices are then empty.
 */
DSDL_API dsdl_status dsdl_train(const dsdl_config* cfg, const dsdl_matrix* data,
                                const dsdl_matrix* basis, dsdl_model** out);
DSDL_API void dsdl_model_free(dsdl_model* model);
DSDL_API const dsdl_matrix* dsdl_model_coefficients(const dsdl_model* model);
DSDL_API const dsdl_matrix* dsdl_model_codes(const dsdl_model* model);
DSDL_API size_t dsdl_model_trace_length(const dsdl_model* model);
DSDL_API dsdl_status dsdl_model_trace_row(const dsdl_model* model, size_t index,
                                          dsdl_trace_row* out);
DSDL_API dsdl_status dsdl_model_save_trace(const dsdl_model* model, const char* path);
/* 800x400 SVG polyline of the relative error per outer iteration. */
DSDL_API dsdl_status dsdl_model_save_svg(const dsdl_model* model, const char* path);

/* ---- evaluation ---------------------------------------------------------- */

typedef struct dsdl_report {
  double rel_error;
  double code_sparsity;
  double coef_sparsity;
  int has_recovery;
  double recovery; /* atom recovery score, valid when has_recovery != 0 */
} dsdl_report;

/* `true_coefficients` may be NULL, in which case no recovery score is computed. */
DSDL_API dsdl_status dsdl_evaluate(const dsdl_matrix* data, const dsdl_matrix* basis,
                                   const dsdl_matrix* coefficients, const dsdl_matrix* codes,
                                   const dsdl_matrix* true_coefficients, dsdl_report* out);

/* ---- primitives ------------------------------------------------------------ */

/* Oracle inner product of two length-`dim` vectors under the config's oracle
 * section, drawing from stream (seed, stream_id). */
DSDL_API dsdl_status dsdl_inner_product(const dsdl_config* cfg, const double* x,
                                        const double* y, size_t dim, uint64_t seed,
                                        uint64_t stream_id, double* out);

/* Randomized Kaczmarz on M x = y using the config's kaczmarz and oracle
 * sections; max_iters == 0 selects 2 * rows(M). x0 may be NULL (zero start).
 * `x_out` receives cols(M) values. */
DSDL_API dsdl_status dsdl_kaczmarz_solve(const dsdl_config* cfg, const dsdl_matrix* m,
                                         const double* y, const double* x0, int32_t max_iters,
                                         uint64_t seed, uint64_t stream_id, double* x_out,
                                         int32_t* iterations_out);

#ifdef __cplusplus
}
#endif

#endif /* DSDL_DSDL_H */
